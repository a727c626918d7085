use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use zonebox::detect::{parse_records, DetectError};
use zonebox::{parse_alto, record_to_region, LabelMap, Page, Region};

/// Expands directories to their `*.<ext>` files, sorted by path. Plain file
/// arguments are kept as given.
pub fn expand(inputs: &[PathBuf], ext: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            out.extend(files_with_ext(input, ext)?);
        } else {
            out.push(input.clone());
        }
    }
    Ok(out)
}

pub fn files_with_ext(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext)) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn read_alto(path: &Path) -> Result<Page> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (page, warnings) = parse_alto(&text).with_context(|| format!("parsing {}", path.display()))?;
    for w in warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(page)
}

/// Reads a record file into regions on a `width x height` page. A class
/// index outside the label map is reported with the offending line.
pub fn read_record_regions(path: &Path, width: u32, height: u32, map: &LabelMap) -> Result<Vec<Region>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let records = parse_records(&text, &path.display().to_string())?;
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();
    records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            record_to_region(rec, i, width, height, map).map_err(|e| match e {
                DetectError::UnknownClass { index, len } => {
                    let (n, line) = lines[i];
                    anyhow::anyhow!(
                        "{}:{n}: class index {index} not in label map of {len} classes: `{}`",
                        path.display(),
                        line.trim()
                    )
                }
                other => other.into(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Kind {
    Auto,
    Alto,
    Records,
}

/// One directory of evaluation inputs, keyed by file stem.
pub enum Inputs {
    Alto(BTreeMap<String, Page>),
    Records(BTreeMap<String, PathBuf>),
}

impl Inputs {
    pub fn is_empty(&self) -> bool {
        match self {
            Inputs::Alto(m) => m.is_empty(),
            Inputs::Records(m) => m.is_empty(),
        }
    }
}

fn keyed(files: Vec<PathBuf>) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for f in files {
        if let Some(prev) = out.insert(file_stem(&f), f.clone()) {
            bail!("{} and {} share a stem", prev.display(), f.display());
        }
    }
    Ok(out)
}

/// Loads a directory. With `Kind::Auto` the extension decides: `.xml`
/// files win, `.txt` files are used if there is no ALTO.
pub fn load_dir(dir: &Path, kind: Kind) -> Result<Inputs> {
    if !dir.is_dir() {
        bail!("{} is not a directory", dir.display());
    }
    let kind = match kind {
        Kind::Auto if !files_with_ext(dir, "xml")?.is_empty() => Kind::Alto,
        Kind::Auto => Kind::Records,
        k => k,
    };
    Ok(match kind {
        Kind::Alto => {
            let mut pages = BTreeMap::new();
            for (stem, path) in keyed(files_with_ext(dir, "xml")?)? {
                pages.insert(stem, read_alto(&path)?);
            }
            Inputs::Alto(pages)
        }
        _ => Inputs::Records(keyed(files_with_ext(dir, "txt")?)?),
    })
}
