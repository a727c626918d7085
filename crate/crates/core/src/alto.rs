//! ALTO v4 reading and writing.
//!
//! Accepted subset:
//!
//! * `Description/sourceImageInformation/fileName` for the image path;
//! * `Tags/*Tag[@ID,@LABEL]`, referenced from blocks through `@TAGREFS`;
//! * the first `Layout/Page[@WIDTH,@HEIGHT]`;
//! * `TextBlock`, `Illustration`, `GraphicalElement` and `ComposedBlock`
//!   elements as regions, with geometry from `Shape/Polygon/@POINTS` or, when
//!   absent, from `@HPOS @VPOS @WIDTH @HEIGHT`;
//! * `TextLine[@BASELINE]` with optional `Shape/Polygon` boundary and
//!   `String/@CONTENT` text. A line belongs to its nearest enclosing block.
//!
//! Point lists may be written `x1 y1 x2 y2 ...` or `x1,y1 x2,y2 ...`; the
//! writer emits the comma-pair form. Lines without a region are written into
//! a block with ID [`FALLBACK_BLOCK_ID`], which the reader turns back into
//! unassigned lines.

use std::collections::{HashMap, HashSet};
use std::io;

use quick_xml::events::{BytesDecl, BytesEnd, BytesStart, BytesText, Event};
use quick_xml::Writer;
use roxmltree::{Document, Node};
use thiserror::Error;

use crate::geometry::{bbox_of_points, BBox, Baseline, Point, Polygon};
use crate::page::{BlockKind, Line, Page, Region, Warning, UNKNOWN_ZONE};

pub const FALLBACK_BLOCK_ID: &str = "UnassignedLines";
const ALTO_NS: &str = "http://www.loc.gov/standards/alto/ns-v4#";
const XSI_NS: &str = "http://www.w3.org/2001/XMLSchema-instance";
const SCHEMA_LOCATION: &str =
    "http://www.loc.gov/standards/alto/ns-v4# http://www.loc.gov/standards/alto/v4/alto-4-3.xsd";

#[derive(Debug, Error)]
pub enum AltoError {
    #[error("XML error at line {line}, column {column}: {message}")]
    Xml {
        line: u32,
        column: u32,
        message: String,
    },
    #[error("ALTO schema error: {0}")]
    Schema(String),
    #[error("line {line_id} references missing region {region_id}")]
    MissingRegion { line_id: String, region_id: String },
    #[error("duplicate region id {0}")]
    DuplicateRegion(String),
    #[error("write failed: {0}")]
    Io(#[from] io::Error),
}

/// Parses one ALTO document. Recoverable problems (unresolved tags,
/// out-of-page geometry, short baselines) are returned as warnings.
pub fn parse_alto(document: &str) -> Result<(Page, Vec<Warning>), AltoError> {
    let doc = Document::parse(document).map_err(|e| {
        let pos = e.pos();
        AltoError::Xml {
            line: pos.row,
            column: pos.col,
            message: e.to_string(),
        }
    })?;
    let root = doc.root_element();
    if root.tag_name().name() != "alto" {
        return Err(AltoError::Schema(format!(
            "root element is <{}>, expected <alto>",
            root.tag_name().name()
        )));
    }

    let tags: HashMap<&str, &str> = root
        .descendants()
        .filter(|n| n.is_element() && n.tag_name().name().ends_with("Tag"))
        .filter_map(|n| Some((n.attribute("ID")?, n.attribute("LABEL")?)))
        .collect();

    let image_path = root
        .descendants()
        .find(|n| n.has_tag_name_local("fileName"))
        .and_then(|n| n.text())
        .map(|t| t.trim().to_string())
        .unwrap_or_default();

    let page_node = root
        .descendants()
        .find(|n| n.has_tag_name_local("Page"))
        .ok_or_else(|| AltoError::Schema("no <Page> element".into()))?;
    let width = page_dimension(&page_node, "WIDTH")?;
    let height = page_dimension(&page_node, "HEIGHT")?;

    let mut reader = PageReader {
        tags,
        width: width as f64,
        height: height as f64,
        warnings: Vec::new(),
        regions: Vec::new(),
        lines: Vec::new(),
        next_region: 0,
        next_line: 0,
    };
    reader.walk(page_node, None);

    let page = Page {
        image_path,
        width,
        height,
        regions: reader.regions,
        lines: reader.lines,
    };
    Ok((page, reader.warnings))
}

trait LocalName {
    fn has_tag_name_local(&self, name: &str) -> bool;
}

impl LocalName for Node<'_, '_> {
    fn has_tag_name_local(&self, name: &str) -> bool {
        self.is_element() && self.tag_name().name() == name
    }
}

fn page_dimension(page: &Node, attr: &str) -> Result<u32, AltoError> {
    let raw = page
        .attribute(attr)
        .ok_or_else(|| AltoError::Schema(format!("<Page> has no {attr}")))?;
    let value: f64 = raw
        .trim()
        .parse()
        .map_err(|_| AltoError::Schema(format!("<Page> {attr}={raw:?} is not a number")))?;
    if !value.is_finite() || value.round() < 1.0 || value > u32::MAX as f64 {
        return Err(AltoError::Schema(format!("<Page> {attr}={raw:?} is not a positive size")));
    }
    Ok(value.round() as u32)
}

/// Parses `x y x y ...` or `x,y x,y ...` into points.
pub fn parse_points(raw: &str) -> Option<Vec<Point>> {
    let nums: Vec<f64> = raw
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect::<Option<_>>()?;
    if !nums.len().is_multiple_of(2) {
        return None;
    }
    Some(nums.chunks(2).map(|c| Point::new(c[0], c[1])).collect())
}

fn shape_polygon_attr<'a>(node: &Node<'a, '_>) -> Option<&'a str> {
    node.children()
        .find(|c| c.has_tag_name_local("Shape"))?
        .children()
        .find(|c| c.has_tag_name_local("Polygon"))?
        .attribute("POINTS")
}

fn attr_f64(node: &Node, name: &str) -> Option<f64> {
    node.attribute(name)?.trim().parse().ok().filter(|v: &f64| v.is_finite())
}

struct PageReader<'a> {
    tags: HashMap<&'a str, &'a str>,
    width: f64,
    height: f64,
    warnings: Vec<Warning>,
    regions: Vec<Region>,
    lines: Vec<Line>,
    next_region: usize,
    next_line: usize,
}

impl<'a> PageReader<'a> {
    fn warn(&mut self, context: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Warning::new(context, message));
    }

    fn walk(&mut self, node: Node<'a, '_>, region: Option<&str>) {
        for child in node.children().filter(|c| c.is_element()) {
            let name = child.tag_name().name();
            if let Some(kind) = BlockKind::from_element_name(name) {
                if child.attribute("ID") == Some(FALLBACK_BLOCK_ID) {
                    self.walk(child, None);
                    continue;
                }
                let id = self.read_region(child, kind);
                self.walk(child, id.as_deref());
            } else if name == "TextLine" {
                self.read_line(child, region);
            } else {
                self.walk(child, region);
            }
        }
    }

    fn polygon_from(&mut self, context: &str, raw: &str) -> Option<Polygon> {
        let Some(points) = parse_points(raw) else {
            self.warn(context, format!("unparsable polygon points {raw:?}"));
            return None;
        };
        match Polygon::new(points) {
            Ok(p) => match p.clamped_to(self.width, self.height) {
                None => Some(p),
                Some(Ok(c)) => {
                    self.warn(context, "polygon clamped to page bounds");
                    Some(c)
                }
                Some(Err(e)) => {
                    self.warn(context, format!("polygon collapsed when clamped to page: {e}"));
                    None
                }
            },
            Err(e) => {
                self.warn(context, format!("ignoring polygon: {e}"));
                None
            }
        }
    }

    fn read_region(&mut self, node: Node<'a, '_>, kind: BlockKind) -> Option<String> {
        self.next_region += 1;
        let id = node
            .attribute("ID")
            .map(str::to_string)
            .unwrap_or_else(|| format!("region_{}", self.next_region));

        let label = node
            .attribute("TAGREFS")
            .into_iter()
            .flat_map(str::split_whitespace)
            .find_map(|r| self.tags.get(r).copied())
            .filter(|l| !l.is_empty());
        let label = match label {
            Some(l) => l.to_string(),
            None => {
                self.warn(&id, format!("no resolvable tag reference, labeled {UNKNOWN_ZONE}"));
                UNKNOWN_ZONE.to_string()
            }
        };

        let polygon = shape_polygon_attr(&node).and_then(|raw| self.polygon_from(&id, raw));
        let bbox = match &polygon {
            Some(p) => p.bbox(),
            None => {
                let rect = (|| {
                    let x = attr_f64(&node, "HPOS")?;
                    let y = attr_f64(&node, "VPOS")?;
                    let w = attr_f64(&node, "WIDTH")?;
                    let h = attr_f64(&node, "HEIGHT")?;
                    BBox::new(x, y, x + w, y + h).ok()
                })();
                let Some(rect) = rect else {
                    self.warn(&id, "block has no usable geometry, skipped");
                    return None;
                };
                match rect.clamped_to(self.width, self.height) {
                    Some(c) => {
                        self.warn(&id, "block rectangle clamped to page bounds");
                        c
                    }
                    None => rect,
                }
            }
        };

        self.regions.push(Region {
            id: id.clone(),
            label,
            kind,
            polygon,
            bbox,
            confidence: None,
        });
        Some(id)
    }

    fn read_line(&mut self, node: Node<'a, '_>, region: Option<&str>) {
        self.next_line += 1;
        let id = node
            .attribute("ID")
            .map(str::to_string)
            .unwrap_or_else(|| format!("line_{}", self.next_line));
        let Some(raw) = node.attribute("BASELINE") else {
            self.warn(&id, "text line has no BASELINE, skipped");
            return;
        };
        let points = match parse_points(raw) {
            Some(p) if p.len() >= 2 => p,
            Some(p) => {
                self.warn(&id, format!("baseline has {} point(s), skipped", p.len()));
                return;
            }
            None => {
                self.warn(&id, format!("unparsable baseline {raw:?}, skipped"));
                return;
            }
        };
        let clamped: Vec<Point> = points
            .iter()
            .map(|p| Point::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height)))
            .collect();
        if clamped != points {
            self.warn(&id, "baseline clamped to page bounds");
        }
        let baseline = Baseline::new(clamped).expect("at least two finite points");
        let boundary = shape_polygon_attr(&node).and_then(|raw| self.polygon_from(&id, raw));
        let words: Vec<&str> = node
            .children()
            .filter(|c| c.has_tag_name_local("String"))
            .filter_map(|c| c.attribute("CONTENT"))
            .collect();
        let text = (!words.is_empty()).then(|| words.join(" "));

        self.lines.push(Line {
            id,
            baseline,
            boundary,
            region_id: region.map(str::to_string),
            text,
        });
    }
}

fn fmt_coord(v: f64) -> String {
    format!("{}", v.round() as i64)
}

fn fmt_points(points: &[Point]) -> String {
    points
        .iter()
        .map(|p| format!("{},{}", fmt_coord(p.x), fmt_coord(p.y)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn rect_attrs(b: &BBox) -> [(&'static str, String); 4] {
    let (x0, y0) = (b.x_min.round() as i64, b.y_min.round() as i64);
    let (x1, y1) = (b.x_max.round() as i64, b.y_max.round() as i64);
    [
        ("HPOS", x0.to_string()),
        ("VPOS", y0.to_string()),
        ("WIDTH", (x1 - x0).to_string()),
        ("HEIGHT", (y1 - y0).to_string()),
    ]
}

fn line_extent(line: &Line) -> BBox {
    let mut pts = line.baseline.points().to_vec();
    if let Some(b) = &line.boundary {
        pts.extend_from_slice(b.points());
    }
    if pts.len() < 3 {
        pts.push(pts[0]);
    }
    bbox_of_points(&pts).expect("finite points")
}

fn union_extent<'a>(lines: impl Iterator<Item = &'a Line>) -> Option<BBox> {
    lines.map(line_extent).reduce(|a, b| BBox {
        x_min: a.x_min.min(b.x_min),
        y_min: a.y_min.min(b.y_min),
        x_max: a.x_max.max(b.x_max),
        y_max: a.y_max.max(b.y_max),
    })
}

struct AltoWriter {
    w: Writer<Vec<u8>>,
}

impl AltoWriter {
    fn start(&mut self, name: &str, attrs: &[(&str, &str)]) -> io::Result<()> {
        let el = BytesStart::new(name).with_attributes(attrs.iter().copied());
        self.w.write_event(Event::Start(el))
    }

    fn empty(&mut self, name: &str, attrs: &[(&str, &str)]) -> io::Result<()> {
        let el = BytesStart::new(name).with_attributes(attrs.iter().copied());
        self.w.write_event(Event::Empty(el))
    }

    fn end(&mut self, name: &str) -> io::Result<()> {
        self.w.write_event(Event::End(BytesEnd::new(name)))
    }

    fn text_element(&mut self, name: &str, text: &str) -> io::Result<()> {
        self.start(name, &[])?;
        self.w.write_event(Event::Text(BytesText::new(text)))?;
        self.end(name)
    }

    fn shape(&mut self, polygon: &Polygon) -> io::Result<()> {
        self.start("Shape", &[])?;
        self.empty("Polygon", &[("POINTS", &fmt_points(polygon.points()))])?;
        self.end("Shape")
    }

    fn block(
        &mut self,
        kind: BlockKind,
        id: &str,
        bbox: &BBox,
        tag: &str,
        polygon: Option<&Polygon>,
        lines: &[&Line],
    ) -> io::Result<()> {
        let rect = rect_attrs(bbox);
        let mut attrs: Vec<(&str, &str)> = vec![("ID", id)];
        attrs.extend(rect.iter().map(|(k, v)| (*k, v.as_str())));
        attrs.push(("TAGREFS", tag));
        let name = kind.element_name();
        self.start(name, &attrs)?;
        if let Some(p) = polygon {
            self.shape(p)?;
        }
        for line in lines {
            self.line(line)?;
        }
        self.end(name)
    }

    fn line(&mut self, line: &Line) -> io::Result<()> {
        let rect = rect_attrs(&line_extent(line));
        let baseline = fmt_points(line.baseline.points());
        let mut attrs: Vec<(&str, &str)> = vec![("ID", &line.id), ("BASELINE", &baseline)];
        attrs.extend(rect.iter().map(|(k, v)| (*k, v.as_str())));
        self.start("TextLine", &attrs)?;
        if let Some(b) = &line.boundary {
            self.shape(b)?;
        }
        if let Some(text) = &line.text {
            self.empty("String", &[("CONTENT", text)])?;
        }
        self.end("TextLine")
    }
}

/// Serializes a page. Lines are nested in their region's block; unassigned
/// lines go into a single fallback block labeled [`UNKNOWN_ZONE`]. All
/// coordinates are rounded to the nearest integer.
pub fn write_alto(page: &Page) -> Result<String, AltoError> {
    let mut seen = HashSet::new();
    for r in &page.regions {
        if !seen.insert(r.id.as_str()) || r.id == FALLBACK_BLOCK_ID {
            return Err(AltoError::DuplicateRegion(r.id.clone()));
        }
    }
    let mut by_region: HashMap<&str, Vec<&Line>> = HashMap::new();
    let mut unassigned = Vec::new();
    for line in &page.lines {
        match &line.region_id {
            Some(rid) if seen.contains(rid.as_str()) => by_region.entry(rid).or_default().push(line),
            Some(rid) => {
                return Err(AltoError::MissingRegion {
                    line_id: line.id.clone(),
                    region_id: rid.clone(),
                })
            }
            None => unassigned.push(line),
        }
    }

    let mut tag_ids: Vec<(String, String)> = Vec::new();
    let mut tag_for = |label: &str| -> String {
        if let Some((id, _)) = tag_ids.iter().find(|(_, l)| l == label) {
            return id.clone();
        }
        let id = format!("BT{}", tag_ids.len() + 1);
        tag_ids.push((id.clone(), label.to_string()));
        id
    };
    let region_tags: Vec<String> = page.regions.iter().map(|r| tag_for(&r.label)).collect();
    let fallback_tag = (!unassigned.is_empty()).then(|| tag_for(UNKNOWN_ZONE));

    let mut out = AltoWriter {
        w: Writer::new_with_indent(Vec::new(), b' ', 2),
    };
    out.w
        .write_event(Event::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)))?;
    out.start(
        "alto",
        &[
            ("xmlns", ALTO_NS),
            ("xmlns:xsi", XSI_NS),
            ("xsi:schemaLocation", SCHEMA_LOCATION),
        ],
    )?;
    out.start("Description", &[])?;
    out.text_element("MeasurementUnit", "pixel")?;
    out.start("sourceImageInformation", &[])?;
    out.text_element("fileName", &page.image_path)?;
    out.end("sourceImageInformation")?;
    out.end("Description")?;

    if !tag_ids.is_empty() {
        out.start("Tags", &[])?;
        for (id, label) in &tag_ids {
            let desc = format!("block type {label}");
            out.empty("OtherTag", &[("ID", id), ("LABEL", label), ("DESCRIPTION", &desc)])?;
        }
        out.end("Tags")?;
    }

    let (w, h) = (page.width.to_string(), page.height.to_string());
    out.start("Layout", &[])?;
    out.start(
        "Page",
        &[("ID", "page_1"), ("PHYSICAL_IMG_NR", "1"), ("WIDTH", &w), ("HEIGHT", &h)],
    )?;
    out.start(
        "PrintSpace",
        &[("HPOS", "0"), ("VPOS", "0"), ("WIDTH", &w), ("HEIGHT", &h)],
    )?;
    for (region, tag) in page.regions.iter().zip(&region_tags) {
        let lines = by_region.remove(region.id.as_str()).unwrap_or_default();
        out.block(region.kind, &region.id, &region.bbox, tag, region.polygon.as_ref(), &lines)?;
    }
    if let Some(tag) = fallback_tag {
        let extent = union_extent(unassigned.iter().copied()).expect("non-empty");
        out.block(BlockKind::TextBlock, FALLBACK_BLOCK_ID, &extent, &tag, None, &unassigned)?;
    }
    out.end("PrintSpace")?;
    out.end("Page")?;
    out.end("Layout")?;
    out.end("alto")?;

    let mut bytes = out.w.into_inner();
    bytes.push(b'\n');
    Ok(String::from_utf8(bytes).expect("writer emits UTF-8"))
}
