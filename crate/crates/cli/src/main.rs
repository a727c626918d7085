mod input;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use zonebox::dispatch::summarize;
use zonebox::export::{export_dataset_with_labels, load_label_map, MANIFEST_FILE};
use zonebox::metrics::DEFAULT_IOU_THRESHOLD;
use zonebox::{assign_splits, collect_label_map, evaluate, inject_with, split_stats, write_alto, LabelMap, Region, Split};

use input::{Inputs, Kind};

#[derive(Parser)]
#[command(name = "zonebox", version, about = "ALTO <-> detection dataset toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Export ALTO pages as a detection training dataset.
    #[command(group(ArgGroup::new("split").required(true).multiple(true).args(["ratios", "train_list", "dev_list", "test_list"])))]
    Convert {
        /// ALTO files or directories of them.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Split ratios train/dev/test, e.g. 8/1/1.
        #[arg(long, requires = "seed", conflicts_with_all = ["train_list", "dev_list", "test_list"])]
        ratios: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Files naming one page per line (ALTO file name or stem).
        #[arg(long)]
        train_list: Option<PathBuf>,
        #[arg(long)]
        dev_list: Option<PathBuf>,
        #[arg(long)]
        test_list: Option<PathBuf>,
        /// Fix class order with a manifest or a one-label-per-line file.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Leave out pages that fail to parse instead of aborting.
        #[arg(long)]
        skip_bad: bool,
    },
    /// Replace a page's regions with detections and reassign its lines.
    Inject {
        alto: PathBuf,
        /// Record file, or a directory holding `<image stem>.txt`.
        predictions: PathBuf,
        /// Manifest or one-label-per-line file mapping class indices.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep the page's original regions next to the detections.
        #[arg(long)]
        keep_regions: bool,
    },
    /// Score predictions against ground truth.
    Eval {
        pred_dir: PathBuf,
        gt_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
        iou: f64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Label map for record inputs.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Kind::Auto)]
        kind: Kind,
    },
    /// Per-class instance counts and areas across splits.
    Stats {
        /// `name=DIR`, repeatable; order is kept in the table.
        #[arg(long = "split", required = true, value_parser = parse_split_arg)]
        splits: Vec<(String, PathBuf)>,
        /// Emit delimiter-separated values instead of an aligned table.
        #[arg(long, value_parser = parse_delimiter)]
        delimiter: Option<u8>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Kv,
}

fn parse_split_arg(s: &str) -> Result<(String, PathBuf), String> {
    let (name, dir) = s.split_once('=').ok_or("expected name=DIR")?;
    if name.is_empty() || dir.is_empty() {
        return Err("expected name=DIR".into());
    }
    Ok((name.to_string(), PathBuf::from(dir)))
}

fn parse_delimiter(s: &str) -> Result<u8, String> {
    match s {
        "\\t" | "tab" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err("delimiter must be a single ASCII character".into()),
    }
}

fn parse_ratios(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = s.split(['/', ',', ':']).collect();
    let [a, b, c] = parts[..] else {
        bail!("ratios need three parts, got `{s}`");
    };
    let num = |p: &str| p.trim().parse::<f64>().map_err(|_| anyhow!("bad ratio `{p}`"));
    Ok([num(a)?, num(b)?, num(c)?])
}

fn read_list(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| input::file_stem(Path::new(l)))
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn convert(
    inputs: &[PathBuf],
    out: &Path,
    ratios: Option<&str>,
    seed: Option<u64>,
    lists: [Option<&PathBuf>; 3],
    labels: Option<&Path>,
    skip_bad: bool,
) -> Result<()> {
    let files = input::expand(inputs, "xml")?;
    if files.is_empty() {
        bail!("no ALTO files found");
    }
    let mut pages = Vec::new();
    let mut failed = 0;
    for f in &files {
        match input::read_alto(f) {
            Ok(p) => pages.push((input::file_stem(f), p)),
            Err(e) if skip_bad => log::warn!("skipping: {e:#}"),
            Err(e) => {
                eprintln!("error: {e:#}");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        bail!("{failed} of {} files failed to parse", files.len());
    }

    let assignment: BTreeMap<String, Split> = match ratios {
        Some(r) => {
            let keys: Vec<String> = pages.iter().map(|(_, p)| p.image_path.clone()).collect();
            assign_splits(&keys, parse_ratios(r)?, seed.expect("clap requires --seed"))?
        }
        None => {
            let mut by_stem: BTreeMap<String, Split> = BTreeMap::new();
            for (split, list) in Split::ALL.into_iter().zip(lists) {
                for stem in list.map(|l| read_list(l)).transpose()?.unwrap_or_default() {
                    if let Some(prev) = by_stem.insert(stem.clone(), split) {
                        bail!("{stem} is listed for both {prev} and {split}");
                    }
                }
            }
            let mut assignment = BTreeMap::new();
            for (file_stem, page) in &pages {
                let split = by_stem
                    .get(file_stem)
                    .or_else(|| by_stem.get(&page.image_stem()))
                    .ok_or_else(|| anyhow!("{file_stem} is not in any split list"))?;
                assignment.insert(page.image_path.clone(), *split);
            }
            assignment
        }
    };

    let pages: Vec<_> = pages.into_iter().map(|(_, p)| p).collect();
    let map = match labels {
        Some(path) => load_label_map(path)?,
        None => collect_label_map(&pages),
    };
    let (_, summary, warnings) = export_dataset_with_labels(&pages, &assignment, out, &map)?;
    for w in warnings {
        log::warn!("{w}");
    }
    println!("{}", out.join(MANIFEST_FILE).display());
    for (split, n) in &summary.pages {
        println!("{split}: {n} pages");
    }
    println!("records: {}", summary.records);
    Ok(())
}

fn inject(alto: &Path, predictions: &Path, labels: &Path, out: &Path, keep_regions: bool) -> Result<()> {
    let page = input::read_alto(alto)?;
    let map = load_label_map(labels)?;
    let records = if predictions.is_dir() {
        let candidates = [page.image_stem(), input::file_stem(alto)];
        candidates
            .iter()
            .map(|s| predictions.join(format!("{s}.txt")))
            .find(|p| p.is_file())
            .ok_or_else(|| anyhow!("no prediction file for {} in {}", candidates[0], predictions.display()))?
    } else {
        predictions.to_path_buf()
    };
    let detections = input::read_record_regions(&records, page.width, page.height, &map)?;
    let (injected, warnings) = inject_with(&page, detections, keep_regions);
    for w in warnings {
        log::warn!("{w}");
    }
    let xml = write_alto(&injected)?;
    fs::write(out, xml).with_context(|| format!("writing {}", out.display()))?;
    let s = summarize(&injected.lines);
    println!("assigned {}, unassigned {}", s.assigned, s.unassigned);
    Ok(())
}

/// Regions per stem. Record boxes are scaled by the ALTO counterpart's page
/// size when there is one and kept normalized otherwise; IoU does not
/// depend on the scale.
fn regions_of(
    inputs: &Inputs,
    other: &Inputs,
    map: Option<&LabelMap>,
) -> Result<BTreeMap<String, Vec<Region>>> {
    match inputs {
        Inputs::Alto(pages) => Ok(pages.iter().map(|(k, p)| (k.clone(), p.regions.clone())).collect()),
        Inputs::Records(files) if files.is_empty() => Ok(BTreeMap::new()),
        Inputs::Records(files) => {
            let map = map.ok_or_else(|| anyhow!("record inputs need --labels"))?;
            let mut out = BTreeMap::new();
            for (stem, path) in files {
                let (w, h) = match other {
                    Inputs::Alto(pages) => pages.get(stem).map_or((1, 1), |p| (p.width, p.height)),
                    Inputs::Records(_) => (1, 1),
                };
                out.insert(stem.clone(), input::read_record_regions(path, w, h, map)?);
            }
            Ok(out)
        }
    }
}

fn eval(pred_dir: &Path, gt_dir: &Path, iou: f64, format: Format, labels: Option<&Path>, kind: Kind) -> Result<()> {
    let gt = input::load_dir(gt_dir, kind)?;
    let pred = input::load_dir(pred_dir, kind)?;
    if gt.is_empty() {
        bail!("no ground truth files in {}", gt_dir.display());
    }
    let map = labels.map(load_label_map).transpose()?;
    let gts = regions_of(&gt, &pred, map.as_ref())?;
    let mut preds = regions_of(&pred, &gt, map.as_ref())?;
    if pred.is_empty() {
        log::warn!("{} holds no predictions", pred_dir.display());
        preds = gts.keys().map(|k| (k.clone(), Vec::new())).collect();
    }
    let missing: Vec<&String> = gts.keys().filter(|k| !preds.contains_key(*k)).collect();
    let extra: Vec<&String> = preds.keys().filter(|k| !gts.contains_key(*k)).collect();
    if !missing.is_empty() || !extra.is_empty() {
        let mut msg = String::from("prediction and ground truth stems differ");
        if !missing.is_empty() {
            msg += &format!("; no predictions for: {}", join(&missing));
        }
        if !extra.is_empty() {
            msg += &format!("; no ground truth for: {}", join(&extra));
        }
        bail!(msg);
    }
    let report = evaluate(&preds, &gts, iou)?;
    print!(
        "{}",
        match format {
            Format::Table => report.to_table(),
            Format::Kv => report.to_kv(),
        }
    );
    Ok(())
}

fn join(items: &[&String]) -> String {
    items.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
}

fn stats(splits: &[(String, PathBuf)], delimiter: Option<u8>) -> Result<()> {
    let mut loaded = Vec::new();
    for (name, dir) in splits {
        let files = input::files_with_ext(dir, "xml")?;
        let pages = files.iter().map(|f| input::read_alto(f)).collect::<Result<Vec<_>>>()?;
        loaded.push((name.clone(), pages));
    }
    let (table, warnings) = split_stats(&loaded);
    for w in warnings {
        log::warn!("{w}");
    }
    print!(
        "{}",
        match delimiter {
            Some(d) => table.to_delimited(d),
            None => table.to_table(),
        }
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Convert {
            inputs,
            out,
            ratios,
            seed,
            train_list,
            dev_list,
            test_list,
            labels,
            skip_bad,
        } => convert(
            &inputs,
            &out,
            ratios.as_deref(),
            seed,
            [train_list.as_ref(), dev_list.as_ref(), test_list.as_ref()],
            labels.as_deref(),
            skip_bad,
        ),
        Command::Inject {
            alto,
            predictions,
            labels,
            out,
            keep_regions,
        } => inject(&alto, &predictions, &labels, &out, keep_regions),
        Command::Eval {
            pred_dir,
            gt_dir,
            iou,
            format,
            labels,
            kind,
        } => eval(&pred_dir, &gt_dir, iou, format, labels.as_deref(), kind),
        Command::Stats { splits, delimiter } => stats(&splits, delimiter),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format(|buf, record| {
            let level = match record.level() {
                log::Level::Warn => "warning".to_string(),
                l => l.as_str().to_lowercase(),
            };
            writeln!(buf, "{level}: {}", record.args())
        })
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
