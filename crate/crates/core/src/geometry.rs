//! Planar primitives in pixel space.
//!
//! Coordinates follow image conventions: origin at the top-left corner, `y`
//! growing downward. Everything is real-valued; rounding only happens when a
//! value is serialized.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("malformed polygon: {0} distinct vertices, at least 3 required")]
    MalformedPolygon(usize),
    #[error("baseline needs at least 2 points, got {0}")]
    ShortBaseline(usize),
    #[error("degenerate baseline: zero total length")]
    DegenerateBaseline,
    #[error("non-finite coordinate ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("inverted box: ({0}, {1}) .. ({2}, {3})")]
    InvertedBox(f64, f64, f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

fn check_finite(points: &[Point]) -> Result<(), GeometryError> {
    match points.iter().find(|p| !p.is_finite()) {
        Some(p) => Err(GeometryError::NonFinite(p.x, p.y)),
        None => Ok(()),
    }
}

/// Axis-aligned (isothetic) rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, GeometryError> {
        check_finite(&[Point::new(x_min, y_min), Point::new(x_max, y_max)])?;
        if x_min > x_max || y_min > y_max {
            return Err(GeometryError::InvertedBox(x_min, y_min, x_max, y_max));
        }
        Ok(Self { x_min, y_min, x_max, y_max })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn is_degenerate(&self) -> bool {
        self.area() <= 0.0
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    pub fn contains(&self, pt: Point) -> bool {
        point_in_box(pt, self)
    }

    /// Clamps the box into `[0, width] x [0, height]`. Returns `None` when
    /// the box was already inside.
    pub fn clamped_to(&self, width: f64, height: f64) -> Option<BBox> {
        let c = BBox {
            x_min: self.x_min.clamp(0.0, width),
            y_min: self.y_min.clamp(0.0, height),
            x_max: self.x_max.clamp(0.0, width),
            y_max: self.y_max.clamp(0.0, height),
        };
        (c != *self).then_some(c)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> BBox {
        BBox {
            x_min: self.x_min + dx,
            y_min: self.y_min + dy,
            x_max: self.x_max + dx,
            y_max: self.y_max + dy,
        }
    }

    pub fn scale(&self, factor: f64) -> BBox {
        BBox {
            x_min: self.x_min * factor,
            y_min: self.y_min * factor,
            x_max: self.x_max * factor,
            y_max: self.y_max * factor,
        }
    }

    /// The four corners, clockwise from the top-left in image coordinates.
    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.x_min, self.y_min),
            Point::new(self.x_max, self.y_min),
            Point::new(self.x_max, self.y_max),
            Point::new(self.x_min, self.y_max),
        ]
    }

    /// Rectangle polygon for a non-degenerate box.
    pub fn to_polygon(&self) -> Result<Polygon, GeometryError> {
        Polygon::new(self.corners().to_vec())
    }
}

/// Simple polygon, implicitly closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    points: Vec<Point>,
}

impl Polygon {
    /// Builds a polygon, dropping consecutive duplicate vertices (including a
    /// repeated closing vertex).
    pub fn new(mut points: Vec<Point>) -> Result<Self, GeometryError> {
        check_finite(&points)?;
        points.dedup();
        while points.len() > 1 && points.first() == points.last() {
            points.pop();
        }
        if points.len() < 3 {
            return Err(GeometryError::MalformedPolygon(points.len()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn bbox(&self) -> BBox {
        bbox_of_points(&self.points).expect("polygon invariant guarantees 3 finite vertices")
    }

    /// Shoelace area (absolute value).
    pub fn area(&self) -> f64 {
        let n = self.points.len();
        let twice: f64 = (0..n)
            .map(|i| {
                let a = self.points[i];
                let b = self.points[(i + 1) % n];
                a.x * b.y - b.x * a.y
            })
            .sum();
        twice.abs() / 2.0
    }

    pub fn contains(&self, pt: Point) -> bool {
        point_in_polygon(pt, self)
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.points.len();
        (0..n).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    /// Clamps every vertex into `[0, width] x [0, height]`. Returns `None` if
    /// nothing moved; `Some(Err)` if clamping collapsed the polygon.
    pub fn clamped_to(&self, width: f64, height: f64) -> Option<Result<Polygon, GeometryError>> {
        let clamped: Vec<Point> = self
            .points
            .iter()
            .map(|p| Point::new(p.x.clamp(0.0, width), p.y.clamp(0.0, height)))
            .collect();
        if clamped == self.points {
            None
        } else {
            Some(Polygon::new(clamped))
        }
    }
}

/// Tightest isothetic rectangle around the vertices of a polygon given as a
/// raw point list.
pub fn bbox_of_points(points: &[Point]) -> Result<BBox, GeometryError> {
    check_finite(points)?;
    if points.len() < 3 {
        return Err(GeometryError::MalformedPolygon(points.len()));
    }
    let init = BBox {
        x_min: f64::INFINITY,
        y_min: f64::INFINITY,
        x_max: f64::NEG_INFINITY,
        y_max: f64::NEG_INFINITY,
    };
    Ok(points.iter().fold(init, |b, p| BBox {
        x_min: b.x_min.min(p.x),
        y_min: b.y_min.min(p.y),
        x_max: b.x_max.max(p.x),
        y_max: b.y_max.max(p.y),
    }))
}

pub fn bbox_of_polygon(p: &Polygon) -> BBox {
    p.bbox()
}

/// Intersection over union. Two boxes with zero union area have IoU 0.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Closed-interval containment.
pub fn point_in_box(pt: Point, b: &BBox) -> bool {
    pt.x >= b.x_min && pt.x <= b.x_max && pt.y >= b.y_min && pt.y <= b.y_max
}

fn on_segment(pt: Point, a: Point, b: Point) -> bool {
    let cross = (b.x - a.x) * (pt.y - a.y) - (b.y - a.y) * (pt.x - a.x);
    cross == 0.0
        && pt.x >= a.x.min(b.x)
        && pt.x <= a.x.max(b.x)
        && pt.y >= a.y.min(b.y)
        && pt.y <= a.y.max(b.y)
}

/// Even-odd ray casting. Points lying exactly on an edge are inside.
pub fn point_in_polygon(pt: Point, p: &Polygon) -> bool {
    let mut inside = false;
    for (a, b) in p.edges() {
        if on_segment(pt, a, b) {
            return true;
        }
        if (a.y > pt.y) != (b.y > pt.y) {
            let x_cross = a.x + (pt.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if pt.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Text baseline polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    points: Vec<Point>,
}

impl Baseline {
    pub fn new(points: Vec<Point>) -> Result<Self, GeometryError> {
        check_finite(&points)?;
        if points.len() < 2 {
            return Err(GeometryError::ShortBaseline(points.len()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn first(&self) -> Point {
        self.points[0]
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance(&w[1])).sum()
    }

    pub fn is_degenerate(&self) -> bool {
        self.length() <= 0.0
    }

    pub fn reversed(&self) -> Baseline {
        let mut points = self.points.clone();
        points.reverse();
        Baseline { points }
    }

    /// Point at half the arc length, linearly interpolated inside the segment
    /// that contains it.
    pub fn midpoint(&self) -> Result<Point, GeometryError> {
        baseline_midpoint(self)
    }
}

pub fn baseline_midpoint(b: &Baseline) -> Result<Point, GeometryError> {
    let seg_lengths: Vec<f64> = b.points.windows(2).map(|w| w[0].distance(&w[1])).collect();
    let total: f64 = seg_lengths.iter().sum();
    if total <= 0.0 {
        return Err(GeometryError::DegenerateBaseline);
    }
    let half = total / 2.0;
    let mut acc = 0.0;
    for (i, &len) in seg_lengths.iter().enumerate() {
        if len > 0.0 && acc + len >= half {
            let t = ((half - acc) / len).clamp(0.0, 1.0);
            let (a, c) = (b.points[i], b.points[i + 1]);
            return Ok(Point::new(a.x + t * (c.x - a.x), a.y + t * (c.y - a.y)));
        }
        acc += len;
    }
    Ok(*b.points.last().expect("baseline has at least 2 points"))
}
