//! Export of pages as a YOLO-style training dataset.
//!
//! Layout under the output directory:
//!
//! ```text
//! data.yaml                 manifest
//! train.txt val.txt test.txt  image lists (images/<split>/<file name>)
//! labels/<split>/<stem>.txt   one record file per page
//! ```
//!
//! Images themselves are not copied; a trainer expects them under
//! `images/<split>/`. Manifest schema:
//!
//! ```text
//! path: <output directory>
//! train: train.txt
//! val: val.txt
//! test: test.txt
//! nc: <number of classes>
//! names:
//!   - "MainZone"
//!   - ...
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::detect::{format_records, region_to_record, DetectError, DetectionRecord};
use crate::page::{collect_label_map, image_stem, LabelMap, Page, Warning};

pub const MANIFEST_FILE: &str = "data.yaml";

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("duplicate image path {0}")]
    DuplicateImage(String),
    #[error("images {0} and {1} share the record file stem {2:?}")]
    DuplicateStem(String, String, String),
    #[error("page {0} is assigned to no split")]
    Unassigned(String),
    #[error("no region labels found; a dataset needs at least one class")]
    NoClasses,
    #[error("page {page}: {source}")]
    Record {
        page: String,
        #[source]
        source: DetectError,
    },
    #[error("invalid split ratios {0:?}")]
    Ratios([f64; 3]),
    #[error("unknown split {0:?} (expected train, dev, val or test)")]
    UnknownSplit(String),
    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExportError + '_ {
    move |source| ExportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    /// Directory / manifest key, following trainer conventions (`val` for dev).
    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = ExportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" | "val" | "valid" | "validation" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            _ => Err(ExportError::UnknownSplit(s.to_string())),
        }
    }
}

/// Seeded assignment of keys to splits in proportion to `ratios`
/// (train, dev, test). Keys are sorted before shuffling so the result only
/// depends on the key set and the seed. Counts use largest remainders.
pub fn assign_splits(
    keys: &[String],
    ratios: [f64; 3],
    seed: u64,
) -> Result<BTreeMap<String, Split>, ExportError> {
    let total: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || total <= 0.0 {
        return Err(ExportError::Ratios(ratios));
    }
    let mut keys: Vec<String> = keys.to_vec();
    keys.sort();
    keys.dedup();
    let n = keys.len();

    let exact: Vec<f64> = ratios.iter().map(|r| r / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut missing = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if missing == 0 {
            break;
        }
        counts[i] += 1;
        missing -= 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    keys.shuffle(&mut rng);
    let mut out = BTreeMap::new();
    let mut it = keys.into_iter();
    for (split, count) in Split::ALL.into_iter().zip(counts) {
        for key in it.by_ref().take(count) {
            out.insert(key, split);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    /// Image list files, relative to `root`.
    pub train: PathBuf,
    pub val: PathBuf,
    pub test: PathBuf,
    pub class_names: Vec<String>,
}

impl DatasetManifest {
    pub fn label_map(&self) -> LabelMap {
        LabelMap::from_labels(self.class_names.iter().cloned())
    }

    pub fn to_yaml(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("path: {}\n", self.root.display()));
        out.push_str(&format!("train: {}\n", self.train.display()));
        out.push_str(&format!("val: {}\n", self.val.display()));
        out.push_str(&format!("test: {}\n", self.test.display()));
        out.push_str(&format!("nc: {}\n", self.class_names.len()));
        out.push_str("names:\n");
        for name in &self.class_names {
            let quoted = serde_json::to_string(name).expect("strings always serialize");
            out.push_str(&format!("  - {quoted}\n"));
        }
        out
    }

    /// Reads the manifest schema written by [`export_dataset`]. Class names
    /// may be a block list or a one-line flow list.
    pub fn from_yaml(text: &str, path: &Path) -> Result<Self, ExportError> {
        let bad = |message: String| ExportError::Manifest {
            path: path.to_path_buf(),
            message,
        };
        let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
        let mut names = Vec::new();
        let mut in_names = false;
        for raw in text.lines() {
            let line = raw.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            if in_names {
                if let Some(item) = line.trim_start().strip_prefix("- ") {
                    names.push(unquote(item.trim()).map_err(&bad)?);
                    continue;
                }
                in_names = false;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| bad(format!("expected `key: value`, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "names" {
                if value.is_empty() {
                    in_names = true;
                } else {
                    names = parse_flow_list(value).map_err(&bad)?;
                }
            } else {
                fields.insert(key, value);
            }
        }
        if names.is_empty() {
            return Err(bad("no class names".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(bad(format!("duplicate class name {dup:?}")));
        }
        if let Some(nc) = fields.get("nc") {
            if nc.parse::<usize>().ok() != Some(names.len()) {
                return Err(bad(format!("nc: {nc} but {} names", names.len())));
            }
        }
        let get = |k: &str, default: &str| PathBuf::from(fields.get(k).copied().unwrap_or(default));
        Ok(DatasetManifest {
            root: get("path", "."),
            train: get("train", "train.txt"),
            val: get("val", "val.txt"),
            test: get("test", "test.txt"),
            class_names: names,
        })
    }
}

fn unquote(s: &str) -> Result<String, String> {
    if s.starts_with('"') {
        serde_json::from_str(s).map_err(|e| format!("bad quoted name {s}: {e}"))
    } else if let Some(inner) = s.strip_prefix('\'').and_then(|t| t.strip_suffix('\'')) {
        Ok(inner.replace("''", "'"))
    } else {
        Ok(s.to_string())
    }
}

fn parse_flow_list(s: &str) -> Result<Vec<String>, String> {
    let inner = s
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| format!("expected [..] list, got {s:?}"))?;
    inner
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(unquote)
        .collect()
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest, ExportError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    DatasetManifest::from_yaml(&text, path)
}

/// Loads a label map from a manifest (`.yaml`/`.yml`) or from a plain file
/// with one class name per line.
pub fn load_label_map(path: &Path) -> Result<LabelMap, ExportError> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if matches!(ext, "yaml" | "yml") {
        return Ok(read_manifest(path)?.label_map());
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let map = LabelMap::from_labels(text.lines().map(str::trim).filter(|l| !l.is_empty()));
    if map.is_empty() {
        return Err(ExportError::Manifest {
            path: path.to_path_buf(),
            message: "no class names".into(),
        });
    }
    Ok(map)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExportSummary {
    pub pages: BTreeMap<Split, usize>,
    pub records: usize,
}

/// Exports pages with a label map built over all of them.
pub fn export_dataset(
    pages: &[Page],
    assignment: &BTreeMap<String, Split>,
    out_dir: &Path,
) -> Result<(DatasetManifest, ExportSummary, Vec<Warning>), ExportError> {
    let map = collect_label_map(pages);
    export_dataset_with_labels(pages, assignment, out_dir, &map)
}

/// Writes one record file per page (even for pages without regions), the
/// per-split image lists and the manifest. Nothing is written unless every
/// page converts.
pub fn export_dataset_with_labels(
    pages: &[Page],
    assignment: &BTreeMap<String, Split>,
    out_dir: &Path,
    map: &LabelMap,
) -> Result<(DatasetManifest, ExportSummary, Vec<Warning>), ExportError> {
    if map.is_empty() {
        return Err(ExportError::NoClasses);
    }
    let mut paths = HashSet::new();
    let mut stems: BTreeMap<String, &str> = BTreeMap::new();
    for page in pages {
        if !paths.insert(page.image_path.as_str()) {
            return Err(ExportError::DuplicateImage(page.image_path.clone()));
        }
        let stem = page.image_stem();
        if let Some(prev) = stems.insert(stem.clone(), &page.image_path) {
            return Err(ExportError::DuplicateStem(prev.into(), page.image_path.clone(), stem));
        }
    }

    let mut warnings = Vec::new();
    let mut converted: Vec<(Split, &Page, Vec<DetectionRecord>)> = Vec::with_capacity(pages.len());
    for page in pages {
        let split = *assignment
            .get(&page.image_path)
            .ok_or_else(|| ExportError::Unassigned(page.image_path.clone()))?;
        let records = page
            .regions
            .iter()
            .map(|r| region_to_record(r, page.width, page.height, map, &mut warnings))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|source| ExportError::Record {
                page: page.image_path.clone(),
                source,
            })?;
        converted.push((split, page, records));
    }

    let mut summary = ExportSummary::default();
    let mut lists: BTreeMap<Split, String> = Split::ALL.iter().map(|s| (*s, String::new())).collect();
    for split in Split::ALL {
        let dir = out_dir.join("labels").join(split.dir_name());
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        summary.pages.insert(split, 0);
    }
    for (split, page, records) in &converted {
        let file = out_dir
            .join("labels")
            .join(split.dir_name())
            .join(format!("{}.txt", page.image_stem()));
        fs::write(&file, format_records(records)).map_err(io_err(&file))?;
        let name = Path::new(&page.image_path)
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| page.image_path.clone());
        let list = lists.get_mut(split).expect("all splits present");
        list.push_str(&format!("./images/{}/{}\n", split.dir_name(), name));
        *summary.pages.get_mut(split).expect("all splits present") += 1;
        summary.records += records.len();
    }
    for (split, list) in &lists {
        let file = out_dir.join(format!("{}.txt", split.dir_name()));
        fs::write(&file, list).map_err(io_err(&file))?;
    }

    let manifest = DatasetManifest {
        root: out_dir.to_path_buf(),
        train: PathBuf::from("train.txt"),
        val: PathBuf::from("val.txt"),
        test: PathBuf::from("test.txt"),
        class_names: map.labels().to_vec(),
    };
    let file = out_dir.join(MANIFEST_FILE);
    fs::write(&file, manifest.to_yaml()).map_err(io_err(&file))?;
    Ok((manifest, summary, warnings))
}

/// Record file location for a page inside an exported dataset.
pub fn record_path(out_dir: &Path, split: Split, page: &Page) -> PathBuf {
    out_dir
        .join("labels")
        .join(split.dir_name())
        .join(format!("{}.txt", image_stem(&page.image_path)))
}
