//! Normalized detection records: `class cx cy w h [confidence]`, one object
//! per line, coordinates relative to the image size with 6 decimals.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geometry::BBox;
use crate::page::{LabelMap, Region, Warning};

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("label {0:?} is not in the label map")]
    UnknownLabel(String),
    #[error("class index {index} out of range for {len} classes")]
    UnknownClass { index: usize, len: usize },
    #[error("region {0} has zero area")]
    DegenerateRegion(String),
    #[error("{file}:{line}: {message}")]
    Malformed {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}: mixes 5- and 6-field records")]
    MixedFields { file: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl DetectError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DetectError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionRecord {
    pub class_index: usize,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub confidence: Option<f64>,
}

impl DetectionRecord {
    /// Edges in normalized coordinates, clamped into `[0, 1]`.
    fn edges(&self) -> (f64, f64, f64, f64) {
        (
            (self.cx - self.w / 2.0).clamp(0.0, 1.0),
            (self.cy - self.h / 2.0).clamp(0.0, 1.0),
            (self.cx + self.w / 2.0).clamp(0.0, 1.0),
            (self.cy + self.h / 2.0).clamp(0.0, 1.0),
        )
    }
}

/// Normalizes a region's box against the page size. Boxes reaching outside
/// the page are clamped first and a warning is pushed.
pub fn region_to_record(
    region: &Region,
    page_w: u32,
    page_h: u32,
    map: &LabelMap,
    warnings: &mut Vec<Warning>,
) -> Result<DetectionRecord, DetectError> {
    let class_index = map
        .index_of(&region.label)
        .ok_or_else(|| DetectError::UnknownLabel(region.label.clone()))?;
    let (pw, ph) = (page_w as f64, page_h as f64);
    let b = match region.bbox.clamped_to(pw, ph) {
        Some(c) => {
            warnings.push(Warning::new(&region.id, "box clamped to page bounds before export"));
            c
        }
        None => region.bbox,
    };
    if b.is_degenerate() || pw <= 0.0 || ph <= 0.0 {
        return Err(DetectError::DegenerateRegion(region.id.clone()));
    }
    Ok(DetectionRecord {
        class_index,
        cx: (b.x_min + b.x_max) / (2.0 * pw),
        cy: (b.y_min + b.y_max) / (2.0 * ph),
        w: b.width() / pw,
        h: b.height() / ph,
        confidence: region.confidence,
    })
}

/// Inverse of [`region_to_record`]. The region gets the rectangle polygon of
/// its box and the id `det_<n>`, `n` being the 1-based position in the file.
pub fn record_to_region(
    rec: &DetectionRecord,
    position: usize,
    page_w: u32,
    page_h: u32,
    map: &LabelMap,
) -> Result<Region, DetectError> {
    let label = map.label(rec.class_index).ok_or(DetectError::UnknownClass {
        index: rec.class_index,
        len: map.len(),
    })?;
    let (pw, ph) = (page_w as f64, page_h as f64);
    let (x0, y0, x1, y1) = rec.edges();
    let bbox = BBox {
        x_min: x0 * pw,
        y_min: y0 * ph,
        x_max: x1 * pw,
        y_max: y1 * ph,
    };
    let mut region = Region::from_box(format!("det_{}", position + 1), label, bbox);
    region.polygon = bbox.to_polygon().ok();
    region.confidence = rec.confidence;
    Ok(region)
}

pub fn records_to_regions(
    records: &[DetectionRecord],
    page_w: u32,
    page_h: u32,
    map: &LabelMap,
) -> Result<Vec<Region>, DetectError> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| record_to_region(r, i, page_w, page_h, map))
        .collect()
}

pub fn format_records(records: &[DetectionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        write!(out, "{} {:.6} {:.6} {:.6} {:.6}", r.class_index, r.cx, r.cy, r.w, r.h).unwrap();
        if let Some(c) = r.confidence {
            write!(out, " {c:.6}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Parses record text; `source` names the file in error messages. Blank lines
/// are ignored. Every record must have the same field count.
pub fn parse_records(text: &str, source: &str) -> Result<Vec<DetectionRecord>, DetectError> {
    let mut records = Vec::new();
    let mut width = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let malformed = |message: String| DetectError::Malformed {
            file: source.to_string(),
            line,
            message,
        };
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 5 && fields.len() != 6 {
            return Err(malformed(format!("expected 5 or 6 fields, found {}", fields.len())));
        }
        if *width.get_or_insert(fields.len()) != fields.len() {
            return Err(DetectError::MixedFields {
                file: source.to_string(),
            });
        }
        let class_index: usize = fields[0]
            .parse()
            .map_err(|_| malformed(format!("class {:?} is not a non-negative integer", fields[0])))?;
        let mut nums = [0.0f64; 5];
        for (slot, f) in nums.iter_mut().zip(&fields[1..]) {
            *slot = f
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| malformed(format!("{f:?} is not a finite number")))?;
        }
        let [cx, cy, w, h, conf] = nums;
        if ![cx, cy, w, h].iter().all(|v| (0.0..=1.0).contains(v)) {
            return Err(malformed("coordinates must lie in [0, 1]".into()));
        }
        let confidence = (fields.len() == 6).then_some(conf);
        if let Some(c) = confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(malformed(format!("confidence {c} outside [0, 1]")));
            }
        }
        records.push(DetectionRecord {
            class_index,
            cx,
            cy,
            w,
            h,
            confidence,
        });
    }
    Ok(records)
}

pub fn write_records(records: &[DetectionRecord], path: &Path) -> Result<(), DetectError> {
    fs::write(path, format_records(records)).map_err(|e| DetectError::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<DetectionRecord>, DetectError> {
    let text = fs::read_to_string(path).map_err(|e| DetectError::io(path, e))?;
    parse_records(&text, &path.display().to_string())
}
