//! Per-split instance counts and region-size statistics.
//!
//! Region size is the area of the region's box as a percentage of the page
//! area. Medians of even-sized samples take the lower middle element.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::page::{Page, Warning};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub label: String,
    /// One count per split, in the table's split order.
    pub counts: Vec<usize>,
    pub total: usize,
    pub average_area: f64,
    pub median_area: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsTable {
    pub splits: Vec<String>,
    /// Sorted by total count descending, then label.
    pub rows: Vec<ClassStats>,
}

/// Lower-middle median. `values` must be non-empty.
pub fn lower_median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values[(values.len() - 1) / 2]
}

pub fn split_stats(pages_by_split: &[(String, Vec<Page>)]) -> (StatsTable, Vec<Warning>) {
    let mut warnings = Vec::new();
    let n_splits = pages_by_split.len();
    let mut counts: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut areas: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (s, (_, pages)) in pages_by_split.iter().enumerate() {
        for page in pages {
            let page_area = page.area();
            if page_area <= 0.0 {
                warnings.push(Warning::new(&page.image_path, "page has zero area, excluded"));
                continue;
            }
            for r in &page.regions {
                counts.entry(&r.label).or_insert_with(|| vec![0; n_splits])[s] += 1;
                areas
                    .entry(&r.label)
                    .or_default()
                    .push(r.bbox.area() / page_area * 100.0);
            }
        }
    }
    let mut rows: Vec<ClassStats> = counts
        .into_iter()
        .map(|(label, counts)| {
            let mut a = areas.remove(label).unwrap_or_default();
            let average_area = a.iter().sum::<f64>() / a.len() as f64;
            let median_area = lower_median(&mut a);
            ClassStats {
                label: label.to_string(),
                total: counts.iter().sum(),
                counts,
                average_area,
                median_area,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.total.cmp(&a.total).then_with(|| a.label.cmp(&b.label)));
    let table = StatsTable {
        splits: pages_by_split.iter().map(|(s, _)| s.clone()).collect(),
        rows,
    };
    (table, warnings)
}

impl StatsTable {
    fn header(&self) -> Vec<String> {
        let mut h = vec!["class".to_string()];
        h.extend(self.splits.iter().cloned());
        h.extend(["total", "average_area", "median_area"].map(String::from));
        h
    }

    fn records(&self) -> impl Iterator<Item = Vec<String>> + '_ {
        self.rows.iter().map(|r| {
            let mut rec = vec![r.label.clone()];
            rec.extend(r.counts.iter().map(usize::to_string));
            rec.push(r.total.to_string());
            rec.push(format!("{:.2}", r.average_area));
            rec.push(format!("{:.2}", r.median_area));
            rec
        })
    }

    /// Right-aligned plain-text table.
    pub fn to_table(&self) -> String {
        let header = self.header();
        let rows: Vec<Vec<String>> = self.records().collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|c| {
                rows.iter()
                    .map(|r| r[c].len())
                    .chain([header[c].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        for row in std::iter::once(&header).chain(&rows) {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (v, w))| if c == 0 { format!("{v:<w$}") } else { format!("{v:>w$}") })
                .collect();
            writeln!(out, "{}", cells.join("  ").trim_end()).unwrap();
        }
        out
    }

    pub fn to_delimited(&self, delimiter: u8) -> String {
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(Vec::new());
        w.write_record(self.header()).expect("in-memory write");
        for rec in self.records() {
            w.write_record(rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 input")
    }
}
