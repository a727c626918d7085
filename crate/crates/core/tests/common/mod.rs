//! Random generators and brute-force reference implementations shared by the
//! integration tests. Nothing here calls the code path it is used to check.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zonebox::geometry::{BBox, Baseline, Point, Polygon};
use zonebox::page::{BlockKind, Line, Page, Region};

pub const LABELS: [&str; 5] = [
    "MainZone",
    "MarginTextZone",
    "DropCapitalZone",
    "RunningTitleZone",
    "NumberingZone",
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_box(rng: &mut impl Rng, w: f64, h: f64) -> BBox {
    let x0 = rng.random_range(0.0..w * 0.95);
    let y0 = rng.random_range(0.0..h * 0.95);
    let x1 = rng.random_range(x0 + w * 0.01..=w);
    let y1 = rng.random_range(y0 + h * 0.01..=h);
    BBox::new(x0, y0, x1, y1).unwrap()
}

pub fn random_int_box(rng: &mut impl Rng, w: u32, h: u32) -> BBox {
    let x0 = rng.random_range(0..w - 1);
    let y0 = rng.random_range(0..h - 1);
    let x1 = rng.random_range(x0 + 1..=w);
    let y1 = rng.random_range(y0 + 1..=h);
    BBox::new(x0 as f64, y0 as f64, x1 as f64, y1 as f64).unwrap()
}

/// Convex polygon: sorted angles on an ellipse around `(cx, cy)`.
pub fn random_convex(rng: &mut impl Rng, cx: f64, cy: f64, rx: f64, ry: f64, n: usize) -> Polygon {
    let mut angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    angles.sort_by(f64::total_cmp);
    let pts = angles
        .iter()
        .map(|a| Point::new(cx + rx * a.cos(), cy + ry * a.sin()))
        .collect();
    Polygon::new(pts).unwrap()
}

pub fn random_baseline(rng: &mut impl Rng, n: usize, span: f64) -> Baseline {
    let pts = (0..n)
        .map(|_| Point::new(rng.random_range(0.0..span), rng.random_range(0.0..span)))
        .collect();
    Baseline::new(pts).unwrap()
}

// ---------------------------------------------------------------- geometry

/// Oracle: coordinate-wise min/max by scanning every vertex.
pub fn brute_bbox(points: &[Point]) -> (f64, f64, f64, f64) {
    let mut out = (points[0].x, points[0].y, points[0].x, points[0].y);
    for p in points {
        if p.x < out.0 {
            out.0 = p.x;
        }
        if p.y < out.1 {
            out.1 = p.y;
        }
        if p.x > out.2 {
            out.2 = p.x;
        }
        if p.y > out.3 {
            out.3 = p.y;
        }
    }
    out
}

/// Oracle: walk the polyline in `steps` equal arc-length increments and
/// return the sample at step `steps / 2`.
pub fn sampled_midpoint(points: &[Point], steps: usize) -> Point {
    let total: f64 = points.windows(2).map(|w| ((w[1].x - w[0].x).powi(2) + (w[1].y - w[0].y).powi(2)).sqrt()).sum();
    let ds = total / steps as f64;
    let target = steps / 2;
    let mut seg = 0;
    let mut seg_start = 0.0;
    let mut sample = Point::new(points[0].x, points[0].y);
    for k in 0..=target {
        let s = k as f64 * ds;
        loop {
            let a = points[seg];
            let b = points[seg + 1];
            let len = ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt();
            if s <= seg_start + len || seg + 2 == points.len() {
                let t = if len > 0.0 { ((s - seg_start) / len).clamp(0.0, 1.0) } else { 0.0 };
                sample = Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
                break;
            }
            seg_start += len;
            seg += 1;
        }
    }
    sample
}

/// Oracle for convex polygons: inside (or on boundary) iff the point is on
/// the inner side of every edge.
pub fn convex_contains(poly: &Polygon, p: Point) -> bool {
    let pts = poly.points();
    let n = pts.len();
    let signed: f64 = (0..n)
        .map(|i| pts[i].x * pts[(i + 1) % n].y - pts[(i + 1) % n].x * pts[i].y)
        .sum();
    let orient = signed.signum();
    (0..n).all(|i| {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        cross * orient >= 0.0
    })
}

/// Independent IoU from edge coordinates.
pub fn ref_iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let iy = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = ix * iy;
    let area = |b: &BBox| (b.x_max - b.x_min) * (b.y_max - b.y_min);
    let union = area(a) + area(b) - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

// ---------------------------------------------------------------- dispatch

/// Oracle: list every region containing the point, pick the smallest box
/// area, earliest on ties.
pub fn brute_assign(pt: Point, regions: &[Region]) -> Option<usize> {
    let containing: Vec<usize> = (0..regions.len())
        .filter(|&i| match &regions[i].polygon {
            Some(p) => p.contains(pt),
            None => {
                let b = &regions[i].bbox;
                b.x_min <= pt.x && pt.x <= b.x_max && b.y_min <= pt.y && pt.y <= b.y_max
            }
        })
        .collect();
    let min_area = containing
        .iter()
        .map(|&i| regions[i].bbox.area())
        .fold(f64::INFINITY, f64::min);
    containing.into_iter().find(|&i| regions[i].bbox.area() == min_area)
}

/// Page with nested/overlapping regions and lines scattered over it.
pub fn random_dispatch_page(rng: &mut impl Rng, idx: usize) -> Page {
    let (w, h) = (rng.random_range(200..2000u32), rng.random_range(200..2000u32));
    let mut page = Page::new(format!("page_{idx}.jpg"), w, h);
    let n_regions = rng.random_range(0..8);
    for i in 0..n_regions {
        let parent = (i > 0 && rng.random_bool(0.4)).then(|| page.regions[rng.random_range(0..i)].bbox);
        let b = match parent {
            // nested inside an earlier region
            Some(p) => {
                let x0 = rng.random_range(p.x_min..p.x_min + p.width() * 0.5);
                let y0 = rng.random_range(p.y_min..p.y_min + p.height() * 0.5);
                let x1 = rng.random_range(x0 + 1.0..=p.x_max.max(x0 + 1.0));
                let y1 = rng.random_range(y0 + 1.0..=p.y_max.max(y0 + 1.0));
                BBox::new(x0, y0, x1, y1).unwrap()
            }
            None => random_box(rng, w as f64, h as f64),
        };
        let label = LABELS[rng.random_range(0..LABELS.len())];
        let region = if rng.random_bool(0.3) {
            let c = Point::new((b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0);
            let n = rng.random_range(3..9);
            let poly = random_convex(rng, c.x, c.y, b.width() / 2.0, b.height() / 2.0, n);
            Region::from_polygon(format!("r{i}"), label, poly)
        } else {
            Region::from_box(format!("r{i}"), label, b)
        };
        page.regions.push(region);
    }
    let n_lines = rng.random_range(0..25);
    for i in 0..n_lines {
        let n = rng.random_range(2..5);
        let x0 = rng.random_range(0.0..w as f64 * 0.8);
        let y = rng.random_range(0.0..h as f64);
        let mut pts: Vec<Point> = (0..n)
            .map(|k| Point::new(x0 + k as f64 * rng.random_range(1.0..60.0), y + rng.random_range(-3.0..3.0)))
            .collect();
        if !page.regions.is_empty() && rng.random_bool(0.5) {
            // centre the line on a point inside, or on the edge of, a region
            let b = page.regions[rng.random_range(0..page.regions.len())].bbox;
            let mut c = Point::new(rng.random_range(b.x_min..=b.x_max), rng.random_range(b.y_min..=b.y_max));
            if rng.random_bool(0.2) {
                c.x = b.x_max;
            }
            let half = rng.random_range(1.0..40.0);
            pts = vec![Point::new(c.x - half, c.y), Point::new(c.x + half, c.y)];
        }
        if rng.random_bool(0.05) {
            pts = vec![pts[0], pts[0]];
        }
        page.lines.push(Line::new(format!("l{i}"), Baseline::new(pts).unwrap()));
    }
    page
}

// ---------------------------------------------------------------- metrics

/// Oracle greedy matcher. Returns, per prediction input index, the matched
/// ground-truth index.
pub fn ref_greedy(preds: &[Region], gts: &[Region], thr: f64) -> Vec<Option<usize>> {
    let conf = |r: &Region| r.confidence.unwrap_or(1.0);
    let mut order: Vec<usize> = (0..preds.len()).collect();
    // insertion sort: strictly higher confidence moves ahead
    for i in 1..order.len() {
        let mut j = i;
        while j > 0 && conf(&preds[order[j]]) > conf(&preds[order[j - 1]]) {
            order.swap(j, j - 1);
            j -= 1;
        }
    }
    let mut used = vec![false; gts.len()];
    let mut out = vec![None; preds.len()];
    for &p in &order {
        let mut best: Option<usize> = None;
        let mut best_iou = -1.0;
        for g in 0..gts.len() {
            if used[g] || gts[g].label != preds[p].label {
                continue;
            }
            let v = ref_iou(&preds[p].bbox, &gts[g].bbox);
            if v >= thr && v > best_iou {
                best = Some(g);
                best_iou = v;
            }
        }
        if let Some(g) = best {
            used[g] = true;
        }
        out[p] = best;
    }
    out
}

/// Exhaustively checks a match set against the greedy definition: replaying
/// predictions in rank order, every TP took an available same-class ground
/// truth with maximal IoU (earliest on ties) above the threshold, and every
/// FP had no available candidate above the threshold.
pub fn verify_greedy(
    preds: &[Region],
    gts: &[Region],
    thr: f64,
    ranked: &[(usize, Option<usize>)],
) -> Result<(), String> {
    let conf = |r: &Region| r.confidence.unwrap_or(1.0);
    if ranked.len() != preds.len() {
        return Err("prediction count differs".into());
    }
    for w in ranked.windows(2) {
        let (a, b) = (w[0].0, w[1].0);
        if conf(&preds[a]) < conf(&preds[b]) || (conf(&preds[a]) == conf(&preds[b]) && a > b) {
            return Err(format!("rank order violated between {a} and {b}"));
        }
    }
    let mut used = vec![false; gts.len()];
    for &(p, matched) in ranked {
        let candidates: Vec<(usize, f64)> = (0..gts.len())
            .filter(|&g| !used[g] && gts[g].label == preds[p].label)
            .map(|g| (g, ref_iou(&preds[p].bbox, &gts[g].bbox)))
            .filter(|(_, v)| *v >= thr)
            .collect();
        match matched {
            None if !candidates.is_empty() => {
                return Err(format!("prediction {p} is FP but could match {:?}", candidates));
            }
            None => {}
            Some(g) => {
                let Some(&(_, v)) = candidates.iter().find(|(c, _)| *c == g) else {
                    return Err(format!("prediction {p} matched unavailable/invalid gt {g}"));
                };
                if candidates.iter().any(|&(c, cv)| cv > v || (cv == v && c < g)) {
                    return Err(format!("prediction {p} did not take the best gt"));
                }
                used[g] = true;
            }
        }
    }
    Ok(())
}

/// Oracle AP: every rank cutoff gives a (recall, precision) point; the
/// envelope `p(r) = max precision at recall >= r` is integrated with the
/// midpoint rule on at least `min_samples` cells. The cell count is a
/// multiple of `gt_count` so that recall steps fall on cell boundaries.
pub fn ref_ap(ranked_hits: &[bool], gt_count: usize, min_samples: usize) -> f64 {
    let mut cut: Vec<(usize, f64)> = Vec::new();
    let mut tp = 0;
    for (k, &hit) in ranked_hits.iter().enumerate() {
        if hit {
            tp += 1;
        }
        cut.push((tp, tp as f64 / (k + 1) as f64));
    }
    let n = gt_count * min_samples.div_ceil(gt_count);
    let mut sum = 0.0;
    for j in 1..=n {
        // sample recall r = (j - 1/2) / n, compared exactly in integers:
        // tp / gt >= (2j - 1) / (2n)
        let p = cut
            .iter()
            .filter(|(tp, _)| 2 * tp * n >= (2 * j - 1) * gt_count)
            .map(|(_, p)| *p)
            .fold(0.0, f64::max);
        sum += p;
    }
    sum / n as f64
}

pub type Keyed = BTreeMap<String, Vec<Region>>;

/// Oracle mAP pipeline: reference greedy matching per image, pooled ranking
/// by (confidence desc, image key order, input order), reference AP.
pub fn ref_map(preds: &Keyed, gts: &Keyed, thr: f64) -> (f64, BTreeMap<String, f64>) {
    let mut gt_count: BTreeMap<String, usize> = BTreeMap::new();
    for g in gts.values().flatten() {
        *gt_count.entry(g.label.clone()).or_default() += 1;
    }
    // (conf, image idx, pred idx, hit)
    let mut pooled: BTreeMap<String, Vec<(f64, usize, usize, bool)>> = BTreeMap::new();
    for (img, (key, gt)) in gts.iter().enumerate() {
        let pr = &preds[key];
        let m = ref_greedy(pr, gt, thr);
        for (i, p) in pr.iter().enumerate() {
            pooled
                .entry(p.label.clone())
                .or_default()
                .push((p.confidence.unwrap_or(1.0), img, i, m[i].is_some()));
        }
    }
    let mut aps = BTreeMap::new();
    for (label, &n) in &gt_count {
        let mut list = pooled.remove(label).unwrap_or_default();
        list.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let hits: Vec<bool> = list.iter().map(|t| t.3).collect();
        aps.insert(label.clone(), ref_ap(&hits, n, 10_000));
    }
    let map = aps.values().sum::<f64>() / aps.len() as f64;
    (map, aps)
}

/// Synthetic evaluation instance: up to `max_images` images, each with up
/// to 10 ground truths and up to 20 predictions over up to 5 classes.
/// Predictions mix jittered copies of ground truth with random boxes.
pub fn random_eval_instance(rng: &mut impl Rng, max_images: usize) -> (Keyed, Keyed) {
    let n_classes = rng.random_range(1..=5);
    let n_images = rng.random_range(1..=max_images);
    let quantized = rng.random_bool(0.3);
    let mut gts = Keyed::new();
    let mut preds = Keyed::new();
    for img in 0..n_images {
        let key = format!("img_{img:02}");
        let (w, h) = (rng.random_range(100.0..1000.0), rng.random_range(100.0..1000.0));
        let n_gt = rng.random_range(0..=10);
        let gt: Vec<Region> = (0..n_gt)
            .map(|i| Region::from_box(format!("g{i}"), LABELS[rng.random_range(0..n_classes)], random_box(rng, w, h)))
            .collect();
        let n_pred = rng.random_range(0..=20);
        let pr: Vec<Region> = (0..n_pred)
            .map(|i| {
                let conf = if quantized {
                    rng.random_range(0..5) as f64 / 4.0
                } else {
                    rng.random_range(0.0..1.0)
                };
                let (label, b) = if !gt.is_empty() && rng.random_bool(0.6) {
                    let g = &gt[rng.random_range(0..gt.len())];
                    let j = g.bbox.width().min(g.bbox.height()) * 0.3;
                    let b = BBox::new(
                        g.bbox.x_min + rng.random_range(-j..=j),
                        g.bbox.y_min + rng.random_range(-j..=j),
                        g.bbox.x_max + rng.random_range(-j..=j),
                        g.bbox.y_max + rng.random_range(-j..=j),
                    )
                    .unwrap_or(g.bbox);
                    let label = if rng.random_bool(0.9) { g.label.clone() } else { LABELS[rng.random_range(0..n_classes)].to_string() };
                    (label, b)
                } else {
                    (LABELS[rng.random_range(0..n_classes)].to_string(), random_box(rng, w, h))
                };
                let mut r = Region::from_box(format!("p{i}"), label, b);
                if !rng.random_bool(0.05) {
                    r.confidence = Some(conf);
                }
                r
            })
            .collect();
        gts.insert(key.clone(), gt);
        preds.insert(key, pr);
    }
    // guarantee at least one ground truth
    if gts.values().all(|g| g.is_empty()) {
        let first = gts.values_mut().next().unwrap();
        first.push(Region::from_box("g0", LABELS[0], BBox::new(0.0, 0.0, 50.0, 50.0).unwrap()));
    }
    (preds, gts)
}

// ---------------------------------------------------------------- ALTO

/// Random page with integer or real coordinates, polygons well separated
/// so that rounding to whole pixels never merges vertices.
pub fn random_alto_page(rng: &mut impl Rng, idx: usize, integer: bool) -> Page {
    let (w, h) = (rng.random_range(100..3000u32), rng.random_range(100..3000u32));
    let mut page = Page::new(format!("scan_{idx:03}.png"), w, h);
    let snap = |v: f64| if integer { v.round() } else { v };
    let n_regions = rng.random_range(0..6);
    for i in 0..n_regions {
        let b = random_box(rng, w as f64, h as f64);
        let b = BBox::new(snap(b.x_min), snap(b.y_min), snap(b.x_max).max(snap(b.x_min) + 1.0).min(w as f64), snap(b.y_max).max(snap(b.y_min) + 1.0).min(h as f64)).unwrap();
        let label = LABELS[rng.random_range(0..LABELS.len())];
        let mut region = if b.width() >= 20.0 && b.height() >= 20.0 && rng.random_bool(0.5) {
            // octagon-ish polygon inside the box
            let (dx, dy) = (b.width() / 4.0, b.height() / 4.0);
            let pts = vec![
                Point::new(snap(b.x_min + dx), b.y_min),
                Point::new(snap(b.x_max - dx), b.y_min),
                Point::new(b.x_max, snap(b.y_min + dy)),
                Point::new(b.x_max, snap(b.y_max - dy)),
                Point::new(snap(b.x_max - dx), b.y_max),
                Point::new(snap(b.x_min + dx), b.y_max),
                Point::new(b.x_min, snap(b.y_max - dy)),
                Point::new(b.x_min, snap(b.y_min + dy)),
            ];
            Region::from_polygon(format!("block_{i}"), label, Polygon::new(pts).unwrap())
        } else {
            Region::from_box(format!("block_{i}"), label, b)
        };
        if rng.random_bool(0.2) {
            region.kind = BlockKind::Illustration;
        }
        page.regions.push(region);
    }
    let n_lines = rng.random_range(0..8);
    for i in 0..n_lines {
        let n = rng.random_range(2..5);
        let x0 = rng.random_range(0.0..w as f64 - 80.0);
        let y = rng.random_range(5.0..h as f64 - 5.0);
        let pts: Vec<Point> = (0..n)
            .map(|k| Point::new(snap(x0 + 20.0 * k as f64 + rng.random_range(0.0..5.0)), snap(y)))
            .collect();
        let mut line = Line::new(format!("line_{i}"), Baseline::new(pts).unwrap());
        if rng.random_bool(0.5) {
            let top = snap((y - 4.0).max(0.0));
            let bot = snap((y + 4.0).min(h as f64));
            let first = line.baseline.points()[0].x;
            let last = line.baseline.points()[n - 1].x;
            line.boundary = Some(
                Polygon::new(vec![Point::new(first, top), Point::new(last, top), Point::new(last, bot), Point::new(first, bot)])
                    .unwrap(),
            );
        }
        if rng.random_bool(0.5) {
            line.text = Some(["in principio", "a < b & \"c\"", "ſeculo"][rng.random_range(0..3)].to_string());
        }
        if !page.regions.is_empty() && rng.random_bool(0.8) {
            line.region_id = Some(page.regions[rng.random_range(0..page.regions.len())].id.clone());
        }
        page.lines.push(line);
    }
    page
}

fn close_pts(a: &[Point], b: &[Point], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(p, q)| (p.x - q.x).abs() <= tol && (p.y - q.y).abs() <= tol)
}

fn close_box(a: &BBox, b: &BBox, tol: f64) -> bool {
    (a.x_min - b.x_min).abs() <= tol
        && (a.y_min - b.y_min).abs() <= tol
        && (a.x_max - b.x_max).abs() <= tol
        && (a.y_max - b.y_max).abs() <= tol
}

/// Lines sorted by id. The writer nests lines inside their block, so line
/// order is only meaningful within a region.
pub fn normalized(page: &Page) -> Page {
    let mut p = page.clone();
    p.lines.sort_by(|a, b| a.id.cmp(&b.id));
    p
}

/// Structural page equality with a coordinate tolerance. Regions are
/// compared in order, lines by id.
pub fn same_structure(a: &Page, b: &Page, tol: f64) -> Result<(), String> {
    let (a, b) = (&normalized(a), &normalized(b));
    if (a.image_path.as_str(), a.width, a.height) != (b.image_path.as_str(), b.width, b.height) {
        return Err("page header differs".into());
    }
    if a.regions.len() != b.regions.len() || a.lines.len() != b.lines.len() {
        return Err(format!(
            "counts differ: {}/{} regions, {}/{} lines",
            a.regions.len(),
            b.regions.len(),
            a.lines.len(),
            b.lines.len()
        ));
    }
    for (r, s) in a.regions.iter().zip(&b.regions) {
        if r.id != s.id || r.label != s.label || r.kind != s.kind {
            return Err(format!("region {} differs in id/label/kind", r.id));
        }
        if !close_box(&r.bbox, &s.bbox, tol) {
            return Err(format!("region {} box {:?} vs {:?}", r.id, r.bbox, s.bbox));
        }
        match (&r.polygon, &s.polygon) {
            (None, None) => {}
            (Some(p), Some(q)) if close_pts(p.points(), q.points(), tol) => {}
            _ => return Err(format!("region {} polygon differs", r.id)),
        }
    }
    for (l, m) in a.lines.iter().zip(&b.lines) {
        if l.id != m.id || l.region_id != m.region_id || l.text != m.text {
            return Err(format!("line {} differs in id/region/text", l.id));
        }
        if !close_pts(l.baseline.points(), m.baseline.points(), tol) {
            return Err(format!("line {} baseline differs", l.id));
        }
        match (&l.boundary, &m.boundary) {
            (None, None) => {}
            (Some(p), Some(q)) if close_pts(p.points(), q.points(), tol) => {}
            _ => return Err(format!("line {} boundary differs", l.id)),
        }
    }
    Ok(())
}

pub fn fixtures_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}
