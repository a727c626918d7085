//! Detection evaluation: greedy IoU matching, all-point interpolated AP per
//! class, macro mAP over classes that have ground truth.
//!
//! Ranking is by confidence, descending. A prediction without confidence
//! counts as 1.0. Ties keep input order: within an image the order of the
//! prediction list, across images the order of the image keys. Matching is
//! per image and per class; the per-image results are pooled into a single
//! precision/recall curve per class.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::iou;
use crate::page::{Page, Region};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("IoU threshold {0} outside (0, 1]")]
    Threshold(f64),
    #[error("ground truth is empty")]
    NoGroundTruth,
    #[error("image keys differ: missing predictions for [{}], missing ground truth for [{}]", .missing_preds.join(", "), .missing_gts.join(", "))]
    KeyMismatch {
        missing_preds: Vec<String>,
        missing_gts: Vec<String>,
    },
    #[error("duplicate image key {0}")]
    DuplicateKey(String),
}

fn check_threshold(thr: f64) -> Result<(), EvalError> {
    if thr > 0.0 && thr <= 1.0 {
        Ok(())
    } else {
        Err(EvalError::Threshold(thr))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatch {
    /// Position in the input prediction list.
    pub index: usize,
    pub label: String,
    pub confidence: f64,
    pub true_positive: bool,
    /// Position of the matched ground truth in the input list.
    pub matched_gt: Option<usize>,
}

/// Matching for one image. `predictions` is in rank order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchResult {
    pub predictions: Vec<PredictionMatch>,
    pub gt_counts: BTreeMap<String, usize>,
}

pub fn confidence_of(r: &Region) -> f64 {
    r.confidence.unwrap_or(1.0)
}

/// Indices of `preds` sorted by confidence descending, stable.
pub fn rank_order(preds: &[Region]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| confidence_of(&preds[b]).total_cmp(&confidence_of(&preds[a])));
    order
}

/// Greedy matching: each prediction, in rank order, takes the still
/// unmatched ground truth of its class with the highest IoU (earliest on
/// ties), provided that IoU reaches `iou_thr`.
pub fn match_detections(preds: &[Region], gts: &[Region], iou_thr: f64) -> Result<MatchResult, EvalError> {
    check_threshold(iou_thr)?;
    let mut gt_counts = BTreeMap::new();
    for g in gts {
        *gt_counts.entry(g.label.clone()).or_insert(0) += 1;
    }
    let mut taken = vec![false; gts.len()];
    let mut predictions = Vec::with_capacity(preds.len());
    for i in rank_order(preds) {
        let p = &preds[i];
        let mut best: Option<(usize, f64)> = None;
        for (j, g) in gts.iter().enumerate() {
            if taken[j] || g.label != p.label {
                continue;
            }
            let v = iou(&p.bbox, &g.bbox);
            if v >= iou_thr && best.is_none_or(|(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        if let Some((j, _)) = best {
            taken[j] = true;
        }
        predictions.push(PredictionMatch {
            index: i,
            label: p.label.clone(),
            confidence: confidence_of(p),
            true_positive: best.is_some(),
            matched_gt: best.map(|(j, _)| j),
        });
    }
    Ok(MatchResult { predictions, gt_counts })
}

/// All-point interpolated AP of a ranked list of hit flags. `None` when
/// there is no ground truth for the class.
pub fn average_precision(ranked_hits: &[bool], gt_count: usize) -> Option<f64> {
    if gt_count == 0 {
        return None;
    }
    let mut precision = Vec::with_capacity(ranked_hits.len());
    let mut tp = 0usize;
    for (k, &hit) in ranked_hits.iter().enumerate() {
        tp += hit as usize;
        precision.push(tp as f64 / (k + 1) as f64);
    }
    // monotone envelope, right to left
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    // each hit adds 1/gt of recall; divide once so a perfect list is exactly 1
    let sum: f64 = ranked_hits
        .iter()
        .zip(&precision)
        .filter(|(hit, _)| **hit)
        .fold(0.0, |acc, (_, p)| acc + p);
    Some((sum / gt_count as f64).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClassReport {
    pub gt: usize,
    pub pred: usize,
    pub tp: usize,
    pub fp: usize,
    pub ap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub iou_threshold: f64,
    pub classes: BTreeMap<String, ClassReport>,
    pub map: f64,
}

impl EvalReport {
    pub fn per_class_ap(&self) -> BTreeMap<&str, f64> {
        self.classes
            .iter()
            .filter_map(|(k, c)| Some((k.as_str(), c.ap?)))
            .collect()
    }

    /// Aligned table, scores in percent with 2 decimals.
    pub fn to_table(&self) -> String {
        let width = self.classes.keys().map(|k| k.len()).max().unwrap_or(0).max(8);
        let mut out = String::new();
        writeln!(out, "{:<width$}  {:>6}  {:>6}  {:>6}  {:>6}  {:>7}", "class", "gt", "pred", "tp", "fp", "AP").unwrap();
        for (label, c) in &self.classes {
            let ap = c.ap.map(|a| format!("{:.2}", a * 100.0)).unwrap_or_else(|| "-".into());
            writeln!(out, "{label:<width$}  {:>6}  {:>6}  {:>6}  {:>6}  {ap:>7}", c.gt, c.pred, c.tp, c.fp).unwrap();
        }
        let title = format!("mAP@{:.2}", self.iou_threshold);
        writeln!(out, "{title:<width$}  {:>6}  {:>6}  {:>6}  {:>6}  {:>7.2}", "", "", "", "", self.map * 100.0).unwrap();
        out
    }

    /// `key=value` lines. Classes without ground truth have no `ap` key.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "iou_threshold={:.2}", self.iou_threshold).unwrap();
        writeln!(out, "map={:.2}", self.map * 100.0).unwrap();
        for (label, c) in &self.classes {
            if let Some(ap) = c.ap {
                writeln!(out, "class.{label}.ap={:.2}", ap * 100.0).unwrap();
            }
            writeln!(out, "class.{label}.gt={}", c.gt).unwrap();
            writeln!(out, "class.{label}.pred={}", c.pred).unwrap();
            writeln!(out, "class.{label}.tp={}", c.tp).unwrap();
            writeln!(out, "class.{label}.fp={}", c.fp).unwrap();
        }
        out
    }
}

/// Evaluates predictions against ground truth, both keyed by image.
pub fn evaluate(
    preds: &BTreeMap<String, Vec<Region>>,
    gts: &BTreeMap<String, Vec<Region>>,
    iou_thr: f64,
) -> Result<EvalReport, EvalError> {
    check_threshold(iou_thr)?;
    if gts.is_empty() {
        return Err(EvalError::NoGroundTruth);
    }
    let missing_preds: Vec<String> = gts.keys().filter(|k| !preds.contains_key(*k)).cloned().collect();
    let missing_gts: Vec<String> = preds.keys().filter(|k| !gts.contains_key(*k)).cloned().collect();
    if !missing_preds.is_empty() || !missing_gts.is_empty() {
        return Err(EvalError::KeyMismatch {
            missing_preds,
            missing_gts,
        });
    }

    let mut classes: BTreeMap<String, ClassReport> = BTreeMap::new();
    // (confidence, hit) per class, in image-key then rank order
    let mut pooled: BTreeMap<String, Vec<(f64, bool)>> = BTreeMap::new();
    for (key, gt) in gts {
        let result = match_detections(&preds[key], gt, iou_thr)?;
        for (label, n) in result.gt_counts {
            classes.entry(label).or_default().gt += n;
        }
        for m in result.predictions {
            let c = classes.entry(m.label.clone()).or_default();
            c.pred += 1;
            if m.true_positive {
                c.tp += 1;
            } else {
                c.fp += 1;
            }
            pooled.entry(m.label).or_default().push((m.confidence, m.true_positive));
        }
    }
    if classes.values().all(|c| c.gt == 0) {
        return Err(EvalError::NoGroundTruth);
    }

    let mut sum = 0.0;
    let mut n = 0usize;
    for (label, c) in classes.iter_mut() {
        let mut ranked = pooled.remove(label).unwrap_or_default();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
        let hits: Vec<bool> = ranked.iter().map(|(_, h)| *h).collect();
        c.ap = average_precision(&hits, c.gt);
        if let Some(ap) = c.ap {
            sum += ap;
            n += 1;
        }
    }
    Ok(EvalReport {
        iou_threshold: iou_thr,
        classes,
        map: sum / n as f64,
    })
}

fn key_pages(pages: &[Page]) -> Result<BTreeMap<String, Vec<Region>>, EvalError> {
    let mut out = BTreeMap::new();
    for p in pages {
        if out.insert(p.image_path.clone(), p.regions.clone()).is_some() {
            return Err(EvalError::DuplicateKey(p.image_path.clone()));
        }
    }
    Ok(out)
}

/// [`evaluate`] over pages keyed by their image path.
pub fn evaluate_pages(pred_pages: &[Page], gt_pages: &[Page], iou_thr: f64) -> Result<EvalReport, EvalError> {
    evaluate(&key_pages(pred_pages)?, &key_pages(gt_pages)?, iou_thr)
}
