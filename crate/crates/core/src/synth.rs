//! Synthetic screening exams for demos and tests.
//!
//! Each view is a 16-bit image holding 14-bit samples: a half-ellipse of
//! tissue against the chest wall, a bright burned-in tag detached from it,
//! and optionally a mass disc or a calcification cluster. Lesion polygons are
//! given in the original frame.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::imageio::save_raster;
use crate::manifest::{CaseEntry, LesionEntry, ManifestDoc};
use crate::types::{
    Birads, BitDepth, Density, FinalCategory, Frame, Laterality, RasterImage, ReportFinding, ViewLabel,
};

pub const SYNTH_WIDTH: u32 = 640;
pub const SYNTH_HEIGHT: u32 = 800;
pub const SYNTH_CASES: usize = 20;
const MAX_14BIT: u16 = 16383;

/// Something drawn inside the breast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feature {
    Mass { cx: f64, cy: f64, radius: f64, contrast: u16 },
    Calcifications { cx: f64, cy: f64, spread: f64, count: usize, seed: u64 },
}

impl Feature {
    /// Polygon outlining the feature, slightly larger than what is drawn.
    pub fn outline(&self) -> Vec<[f64; 2]> {
        let (cx, cy, r) = match *self {
            Feature::Mass { cx, cy, radius, .. } => (cx, cy, radius + 3.0),
            Feature::Calcifications { cx, cy, spread, .. } => (cx, cy, spread + 6.0),
        };
        (0..24)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / 24.0;
                [(cx + r * a.cos()).round(), (cy + r * a.sin()).round()]
            })
            .collect()
    }

    fn dots(&self) -> Vec<(i64, i64)> {
        match *self {
            Feature::Calcifications { cx, cy, spread, count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..count)
                    .map(|_| {
                        let a = rng.random_range(0.0..2.0 * PI);
                        let r = spread * rng.random::<f64>().sqrt();
                        ((cx + r * a.cos()).round() as i64, (cy + r * a.sin()).round() as i64)
                    })
                    .collect()
            }
            Feature::Mass { .. } => Vec::new(),
        }
    }
}

/// Geometry of one synthetic view.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewSpec {
    pub width: u32,
    pub height: u32,
    /// Chest wall on the left edge (right breast) or the right edge.
    pub chest_left: bool,
    /// Horizontal and vertical semi-axes of the breast.
    pub axes: (f64, f64),
    pub center_y: f64,
    /// Tag rectangles `(x, y, w, h)`.
    pub tags: Vec<(u32, u32, u32, u32)>,
    pub features: Vec<Feature>,
    pub seed: u64,
}

impl ViewSpec {
    pub fn for_view(view: ViewLabel, seed: u64) -> Self {
        let chest_left = view.laterality() == Laterality::Right;
        let tag_x = if chest_left { SYNTH_WIDTH - 90 } else { 30 };
        Self {
            width: SYNTH_WIDTH,
            height: SYNTH_HEIGHT,
            chest_left,
            axes: (380.0, 350.0),
            center_y: 400.0,
            tags: vec![(tag_x, 24, 56, 22)],
            features: Vec::new(),
            seed,
        }
    }

    /// Whether `(x, y)` lies inside the breast ellipse.
    pub fn inside(&self, x: f64, y: f64) -> bool {
        let dx = if self.chest_left { x } else { self.width as f64 - 1.0 - x };
        let dy = y - self.center_y;
        (dx / self.axes.0).powi(2) + (dy / self.axes.1).powi(2) <= 1.0
    }

    /// A point at fractional depth `depth` from the chest wall and `offset` of the
    /// vertical semi-axis from the centre line.
    pub fn point(&self, depth: f64, offset: f64) -> (f64, f64) {
        let d = depth * self.axes.0;
        let x = if self.chest_left { d } else { self.width as f64 - 1.0 - d };
        (x.round(), (self.center_y + offset * self.axes.1).round())
    }

    pub fn render(&self) -> RasterImage {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let phase: f64 = rng.random_range(0.0..2.0 * PI);
        let (w, h) = (self.width as usize, self.height as usize);
        let mut px = vec![0u16; w * h];
        for y in 0..h {
            for x in 0..w {
                let (fx, fy) = (x as f64, y as f64);
                if !self.inside(fx, fy) {
                    continue;
                }
                let dx = if self.chest_left { fx } else { w as f64 - 1.0 - fx };
                let r2 = (dx / self.axes.0).powi(2) + ((fy - self.center_y) / self.axes.1).powi(2);
                let texture = 250.0 * ((fx / 53.0 + phase).sin() * (fy / 71.0 - phase).cos());
                let noise: f64 = rng.random_range(-60.0..60.0);
                let v = 4200.0 + 1800.0 * (1.0 - r2).sqrt() + texture + noise;
                px[y * w + x] = v.clamp(1500.0, MAX_14BIT as f64) as u16;
            }
        }
        for f in &self.features {
            match *f {
                Feature::Mass { cx, cy, radius, contrast } => {
                    for y in 0..h {
                        for x in 0..w {
                            let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                            if d <= radius && px[y * w + x] > 0 {
                                // Soft edge over the outer 20% of the radius.
                                let edge = ((radius - d) / (0.2 * radius)).min(1.0);
                                let v = px[y * w + x] as f64 + contrast as f64 * edge;
                                px[y * w + x] = v.min(MAX_14BIT as f64) as u16;
                            }
                        }
                    }
                }
                Feature::Calcifications { .. } => {
                    for (dx, dy) in f.dots() {
                        for (ox, oy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                            let (x, y) = (dx + ox, dy + oy);
                            if x >= 0
                                && y >= 0
                                && (x as usize) < w
                                && (y as usize) < h
                                && px[y as usize * w + x as usize] > 0
                            {
                                let i = y as usize * w + x as usize;
                                px[i] = (px[i] as u32 + 6000).min(MAX_14BIT as u32) as u16;
                            }
                        }
                    }
                }
            }
        }
        for &(tx, ty, tw, th) in &self.tags {
            for y in ty..(ty + th).min(self.height) {
                for x in tx..(tx + tw).min(self.width) {
                    px[y as usize * w + x as usize] = 12000;
                }
            }
        }
        RasterImage::new(self.width, self.height, BitDepth::Sixteen, px).expect("14-bit samples")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    MalignantMass,
    MalignantCalc,
    MalignantBoth,
    MalignantOther,
    BenignMass,
    Normal,
}

fn kind_of(index: usize) -> Kind {
    match index {
        0..=2 => Kind::MalignantMass,
        3..=5 => Kind::MalignantCalc,
        6 => Kind::MalignantBoth,
        7 => Kind::MalignantOther,
        8..=12 => Kind::BenignMass,
        _ => Kind::Normal,
    }
}

/// One generated case: manifest entry plus the view specs to render.
#[derive(Debug, Clone)]
pub struct SynthCase {
    pub entry: CaseEntry,
    pub views: BTreeMap<ViewLabel, ViewSpec>,
}

/// Lays out case `index` of the standard set.
/// Cases 0-7 are malignant (mass, calcification, both, and one "other"
/// lesion the baseline cannot see), 8-12 carry a faint benign mass, the rest
/// are normal.
pub fn synth_case(index: usize, seed: u64) -> SynthCase {
    let kind = kind_of(index);
    let case_seed = seed.wrapping_mul(1_000_003).wrapping_add(index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
    let side = if rng.random::<bool>() { Laterality::Left } else { Laterality::Right };
    let depth = rng.random_range(0.35..0.55);
    let offset = rng.random_range(-0.3..0.3);

    let mut views = BTreeMap::new();
    for (i, v) in ViewLabel::ALL.into_iter().enumerate() {
        views.insert(v, ViewSpec::for_view(v, case_seed.wrapping_mul(31).wrapping_add(i as u64)));
    }

    let mut findings = Vec::new();
    let mut lesions = Vec::new();
    let lesion_views: Vec<ViewLabel> = ViewLabel::ALL.into_iter().filter(|v| v.laterality() == side).collect();
    let mut add = |category: FinalCategory, suspicious: bool, make: &dyn Fn(&ViewSpec, u64) -> Option<Feature>| {
        findings.push(ReportFinding { category, suspicious });
        for &v in &lesion_views {
            let spec = views.get_mut(&v).expect("all views present");
            let feature = make(spec, case_seed ^ (v as u64 + 17));
            let polygon = match feature {
                Some(f) => {
                    spec.features.push(f);
                    f.outline()
                }
                // Not drawn: the outline is a small disc at the lesion site.
                None => {
                    let (cx, cy) = spec.point(depth, offset);
                    Feature::Mass { cx, cy, radius: 14.0, contrast: 0 }.outline()
                }
            };
            lesions.push(LesionEntry { view: v, category, suspicious, polygon, frame: Frame::Original });
        }
    };

    let mass = |contrast: u16| {
        move |spec: &ViewSpec, _: u64| {
            let (cx, cy) = spec.point(depth, offset);
            Some(Feature::Mass { cx, cy, radius: 20.0, contrast })
        }
    };
    let calc = |spec: &ViewSpec, s: u64| {
        let (cx, cy) = spec.point(depth + 0.12, -offset);
        Some(Feature::Calcifications { cx, cy, spread: 16.0, count: 7, seed: s })
    };
    let birads = match kind {
        Kind::MalignantMass => {
            add(FinalCategory::Mass, true, &mass(4000));
            Birads::B4B
        }
        Kind::MalignantCalc => {
            add(FinalCategory::Calcification, true, &calc);
            Birads::B4A
        }
        Kind::MalignantBoth => {
            add(FinalCategory::Mass, true, &mass(4000));
            add(FinalCategory::Calcification, true, &calc);
            Birads::B5
        }
        Kind::MalignantOther => {
            add(FinalCategory::Other, true, &|_, _| None);
            Birads::B4A
        }
        Kind::BenignMass => {
            add(FinalCategory::Mass, false, &mass(900));
            Birads::B2
        }
        Kind::Normal => Birads::B1,
    };

    let id = format!("case{index:03}");
    let entry = CaseEntry {
        id: id.clone(),
        views: ViewLabel::ALL.into_iter().map(|v| (v.to_string(), format!("images/{id}_{v}.png"))).collect(),
        birads,
        density: [Density::A, Density::B, Density::C, Density::D][index % 4],
        report_findings: findings,
        lesions,
        max_input: None,
    };
    SynthCase { entry, views }
}

/// Writes `images/*.png` and `manifest.json` for the first `n_cases` cases of
/// the standard set under `dir` and returns the manifest path.
pub fn write_dataset(dir: &Path, seed: u64, n_cases: usize) -> std::io::Result<PathBuf> {
    let images = dir.join("images");
    fs::create_dir_all(&images)?;
    let cases: Vec<SynthCase> = (0..n_cases).map(|i| synth_case(i, seed)).collect();
    cases.par_iter().try_for_each(|c| {
        for (v, spec) in &c.views {
            let path = dir.join(&c.entry.views[&v.to_string()]);
            save_raster(&spec.render(), &path).map_err(std::io::Error::other)?;
        }
        Ok::<_, std::io::Error>(())
    })?;
    let doc =
        ManifestDoc { dataset_id: format!("synthetic-{seed}"), cases: cases.into_iter().map(|c| c.entry).collect() };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&doc).map_err(std::io::Error::other)?;
    crate::fsutil::write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

/// Varied single views for exercising preprocessing: different sizes, sides,
/// breast shapes and one or two tags, always separated from the breast.
pub fn preprocessing_corpus(n: usize, seed: u64) -> Vec<(ViewLabel, ViewSpec)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let view = ViewLabel::ALL[i % 4];
            let width = rng.random_range(480..=720);
            let height = rng.random_range(600..=900);
            let mut spec = ViewSpec::for_view(view, rng.random());
            spec.width = width;
            spec.height = height;
            spec.axes = (width as f64 * rng.random_range(0.45..0.62), height as f64 * rng.random_range(0.35..0.45));
            spec.center_y = height as f64 * rng.random_range(0.47..0.53);
            let far = |w: u32| if spec.chest_left { width - w - 12 } else { 12 };
            let (tw, th) = (rng.random_range(30..70), rng.random_range(14..30));
            spec.tags = vec![(far(tw), 10, tw, th)];
            if rng.random::<bool>() {
                spec.tags.push((far(tw), height - th - 10, tw, th));
            }
            (view, spec)
        })
        .collect()
}
