//! Layout-analysis toolkit built around a pluggable region detector.
//!
//! Pages are read from ALTO, their regions reduced to isothetic boxes and
//! exported as normalized detection records for training. At inference time
//! detector output is injected back into a line-segmented page, each line
//! dispatched to the region containing its baseline midpoint, and the result
//! written as ALTO. Detection quality is measured with mAP at a fixed IoU
//! threshold.

pub mod alto;
pub mod detect;
pub mod dispatch;
pub mod export;
pub mod geometry;
pub mod metrics;
pub mod page;
pub mod stats;

pub use alto::{parse_alto, write_alto, AltoError};
pub use detect::{
    read_records, record_to_region, records_to_regions, region_to_record, write_records, DetectError,
    DetectionRecord,
};
pub use dispatch::{assign_lines, inject, inject_with, DispatchSummary};
pub use export::{assign_splits, export_dataset, DatasetManifest, ExportError, Split};
pub use geometry::{
    baseline_midpoint, bbox_of_polygon, iou, point_in_box, point_in_polygon, BBox, Baseline,
    GeometryError, Point, Polygon,
};
pub use metrics::{evaluate, evaluate_pages, EvalError, EvalReport};
pub use page::{collect_label_map, BlockKind, LabelMap, Line, Page, Region, Warning, UNKNOWN_ZONE};
pub use stats::{split_stats, StatsTable};
