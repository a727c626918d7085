//! Line-to-region dispatch.
//!
//! A line belongs to the region containing its baseline midpoint. When
//! several regions contain it, the one with the smallest box area wins, then
//! the earliest in input order.

use crate::geometry::Point;
use crate::page::{Line, Page, Region, Warning};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DispatchSummary {
    pub assigned: usize,
    pub unassigned: usize,
}

/// The point used to place a line: its baseline midpoint, or the first
/// baseline point when the baseline has zero length.
pub fn anchor_point(line: &Line, warnings: &mut Vec<Warning>) -> Point {
    match line.baseline.midpoint() {
        Ok(p) => p,
        Err(_) => {
            warnings.push(Warning::new(
                &line.id,
                "degenerate baseline, using its first point",
            ));
            line.baseline.first()
        }
    }
}

/// Index of the region a point dispatches to.
pub fn containing_region(pt: Point, regions: &[Region]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in regions.iter().enumerate() {
        if !r.contains(pt) {
            continue;
        }
        let area = r.bbox.area();
        if best.is_none_or(|(_, a)| area < a) {
            best = Some((i, area));
        }
    }
    best.map(|(i, _)| i)
}

/// Fills `region_id` on every line. Existing assignments are overwritten;
/// lines outside every region end up unassigned.
pub fn assign_lines(lines: &[Line], regions: &[Region]) -> (Vec<Line>, Vec<Warning>) {
    let mut warnings = Vec::new();
    let out = lines
        .iter()
        .map(|line| {
            let pt = anchor_point(line, &mut warnings);
            let mut line = line.clone();
            line.region_id = containing_region(pt, regions).map(|i| regions[i].id.clone());
            line
        })
        .collect();
    (out, warnings)
}

pub fn summarize(lines: &[Line]) -> DispatchSummary {
    let assigned = lines.iter().filter(|l| l.region_id.is_some()).count();
    DispatchSummary {
        assigned,
        unassigned: lines.len() - assigned,
    }
}

/// Replaces the page's regions with `detections` and re-dispatches lines.
pub fn inject(page: &Page, detections: Vec<Region>) -> (Page, Vec<Warning>) {
    inject_with(page, detections, false)
}

/// Like [`inject`]; with `keep_existing` the original regions stay in front
/// of the detections. Detection ids clashing with an existing id get a
/// numeric suffix.
pub fn inject_with(page: &Page, detections: Vec<Region>, keep_existing: bool) -> (Page, Vec<Warning>) {
    let mut regions = if keep_existing {
        page.regions.clone()
    } else {
        Vec::new()
    };
    for mut det in detections {
        if regions.iter().any(|r| r.id == det.id) {
            let base = det.id.clone();
            let mut n = 2;
            while regions.iter().any(|r| r.id == format!("{base}_{n}")) {
                n += 1;
            }
            det.id = format!("{base}_{n}");
        }
        regions.push(det);
    }
    let (lines, warnings) = assign_lines(&page.lines, &regions);
    let page = Page {
        image_path: page.image_path.clone(),
        width: page.width,
        height: page.height,
        regions,
        lines,
    };
    (page, warnings)
}
