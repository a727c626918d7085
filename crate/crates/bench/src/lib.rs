//! Seeded synthetic inputs for the benchmarks.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zonebox::{BBox, Baseline, Line, Page, Point, Polygon, Region};

pub const LABELS: [&str; 5] = ["MainZone", "MarginTextZone", "DropCapitalZone", "NumberingZone", "GraphicZone"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_box(rng: &mut impl Rng, w: f64, h: f64) -> BBox {
    let x0 = rng.random_range(0.0..w * 0.9);
    let y0 = rng.random_range(0.0..h * 0.9);
    let x1 = rng.random_range(x0 + w * 0.01..=w);
    let y1 = rng.random_range(y0 + h * 0.01..=h);
    BBox::new(x0, y0, x1, y1).unwrap()
}

/// Page with `regions` blocks (every other one an octagon) and `lines`
/// two-point baselines at integer coordinates.
pub fn page(rng: &mut impl Rng, regions: usize, lines: usize) -> Page {
    let (w, h) = (2480u32, 3508u32);
    let mut page = Page::new("bench.jpg", w, h);
    for i in 0..regions {
        let b = random_box(rng, w as f64, h as f64);
        let b = BBox::new(b.x_min.floor(), b.y_min.floor(), b.x_max.ceil(), b.y_max.ceil()).unwrap();
        let label = LABELS[i % LABELS.len()];
        let region = if i % 2 == 0 {
            let (dx, dy) = ((b.width() / 4.0).floor(), (b.height() / 4.0).floor());
            let pts = vec![
                Point::new(b.x_min + dx, b.y_min),
                Point::new(b.x_max - dx, b.y_min),
                Point::new(b.x_max, b.y_min + dy),
                Point::new(b.x_max, b.y_max - dy),
                Point::new(b.x_max - dx, b.y_max),
                Point::new(b.x_min + dx, b.y_max),
                Point::new(b.x_min, b.y_max - dy),
                Point::new(b.x_min, b.y_min + dy),
            ];
            match Polygon::new(pts) {
                Ok(p) => Region::from_polygon(format!("r{i}"), label, p),
                Err(_) => Region::from_box(format!("r{i}"), label, b),
            }
        } else {
            Region::from_box(format!("r{i}"), label, b)
        };
        page.regions.push(region);
    }
    for i in 0..lines {
        let x = rng.random_range(0..w - 400) as f64;
        let y = rng.random_range(0..h) as f64;
        let baseline = Baseline::new(vec![Point::new(x, y), Point::new(x + 400.0, y)]).unwrap();
        page.lines.push(Line::new(format!("l{i}"), baseline));
    }
    page
}

pub type Keyed = BTreeMap<String, Vec<Region>>;

/// Ground truth over `images` pages and predictions that jitter most of it.
pub fn eval_set(rng: &mut impl Rng, images: usize, per_image: usize) -> (Keyed, Keyed) {
    let mut gts = Keyed::new();
    let mut preds = Keyed::new();
    for img in 0..images {
        let key = format!("img_{img:04}");
        let gt: Vec<Region> = (0..per_image)
            .map(|i| Region::from_box(format!("g{i}"), LABELS[i % LABELS.len()], random_box(rng, 1000.0, 1400.0)))
            .collect();
        let pr = gt
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let j = rng.random_range(-8.0..8.0);
                Region::from_box(format!("p{i}"), g.label.clone(), g.bbox.translate(j, -j))
                    .with_confidence(rng.random_range(0.0..1.0))
            })
            .collect();
        gts.insert(key.clone(), gt);
        preds.insert(key, pr);
    }
    (preds, gts)
}
