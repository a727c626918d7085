//! The page model shared by every stage of the pipeline.

use std::collections::HashMap;
use std::fmt;

use crate::geometry::{BBox, Baseline, Polygon};

/// Label given to blocks without a resolvable tag and to the block that
/// collects unassigned lines on output.
pub const UNKNOWN_ZONE: &str = "UnknownZone";

/// ALTO element a region is serialized as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BlockKind {
    #[default]
    TextBlock,
    Illustration,
    GraphicalElement,
    ComposedBlock,
}

impl BlockKind {
    pub fn element_name(self) -> &'static str {
        match self {
            BlockKind::TextBlock => "TextBlock",
            BlockKind::Illustration => "Illustration",
            BlockKind::GraphicalElement => "GraphicalElement",
            BlockKind::ComposedBlock => "ComposedBlock",
        }
    }

    pub fn from_element_name(name: &str) -> Option<Self> {
        Some(match name {
            "TextBlock" => BlockKind::TextBlock,
            "Illustration" => BlockKind::Illustration,
            "GraphicalElement" => BlockKind::GraphicalElement,
            "ComposedBlock" => BlockKind::ComposedBlock,
            _ => return None,
        })
    }
}

/// A labeled zone. When `polygon` is present, `bbox` is its bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: String,
    pub label: String,
    pub kind: BlockKind,
    pub polygon: Option<Polygon>,
    pub bbox: BBox,
    pub confidence: Option<f64>,
}

impl Region {
    pub fn from_box(id: impl Into<String>, label: impl Into<String>, bbox: BBox) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            kind: BlockKind::TextBlock,
            polygon: None,
            bbox,
            confidence: None,
        }
    }

    pub fn from_polygon(id: impl Into<String>, label: impl Into<String>, polygon: Polygon) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            kind: BlockKind::TextBlock,
            bbox: polygon.bbox(),
            polygon: Some(polygon),
            confidence: None,
        }
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = Some(confidence);
        self
    }

    /// Polygon containment when a polygon exists, box containment otherwise.
    pub fn contains(&self, pt: crate::geometry::Point) -> bool {
        match &self.polygon {
            Some(p) => p.contains(pt),
            None => self.bbox.contains(pt),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub id: String,
    pub baseline: Baseline,
    pub boundary: Option<Polygon>,
    pub region_id: Option<String>,
    /// Transcription carried through untouched.
    pub text: Option<String>,
}

impl Line {
    pub fn new(id: impl Into<String>, baseline: Baseline) -> Self {
        Self {
            id: id.into(),
            baseline,
            boundary: None,
            region_id: None,
            text: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Page {
    pub image_path: String,
    pub width: u32,
    pub height: u32,
    pub regions: Vec<Region>,
    pub lines: Vec<Line>,
}

impl Page {
    pub fn new(image_path: impl Into<String>, width: u32, height: u32) -> Self {
        Self {
            image_path: image_path.into(),
            width,
            height,
            regions: Vec::new(),
            lines: Vec::new(),
        }
    }

    pub fn area(&self) -> f64 {
        self.width as f64 * self.height as f64
    }

    pub fn region(&self, id: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }

    /// File stem of the image path, used to pair pages with record files.
    pub fn image_stem(&self) -> String {
        image_stem(&self.image_path)
    }
}

pub fn image_stem(path: &str) -> String {
    std::path::Path::new(path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string())
}

/// Ordered set of labels with a bidirectional label <-> class index mapping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelMap {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a map from an ordered list, ignoring repeated entries.
    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut map = Self::new();
        for l in labels {
            map.insert(l.into());
        }
        map
    }

    /// Adds a label if absent and returns its index.
    pub fn insert(&mut self, label: String) -> usize {
        if let Some(&i) = self.index.get(&label) {
            return i;
        }
        let i = self.labels.len();
        self.index.insert(label.clone(), i);
        self.labels.push(label);
        i
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Labels in first-occurrence order across the page sequence.
pub fn collect_label_map<'a, I>(pages: I) -> LabelMap
where
    I: IntoIterator<Item = &'a Page>,
{
    let mut map = LabelMap::new();
    for page in pages {
        for r in &page.regions {
            map.insert(r.label.clone());
        }
    }
    map
}

/// Non-fatal condition collected while processing a page.
#[derive(Debug, Clone, PartialEq)]
pub struct Warning {
    pub context: String,
    pub message: String,
}

impl Warning {
    pub fn new(context: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            context: context.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.context, self.message)
    }
}
