//! Rule-based stand-in detector. It is not a model of anything clinical; it
//! produces maps with the right shape and range so the rest of the pipeline
//! can run without an external inference backend.
//!
//! * `SuspCalc`: white top-hat (7x7 square) inside the breast eroded by a few
//!   pixels, thresholded at the larger of a floor and the 99.5th percentile,
//!   then dilated by a couple of native cells.
//! * `SuspMass`: difference of mask-normalised box means (small minus large window).
//! * `Other` and benign nodes: a fixed low score inside the breast.
//! * `Normal`: `1 - max(other maps)`.
//!
//! Maps are computed in the canonical frame and max-pooled to the native grid.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{PredictionBundle, ProbabilityMap, NATIVE_HEIGHT, NATIVE_WIDTH};
use crate::preprocess::morphology::{erode_disc, max_filter, white_top_hat};
use crate::preprocess::PreprocessedView;
use crate::types::{BinaryMask, ModelNode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub tophat_radius: u32,
    pub calc_border: u32,
    pub calc_percentile: f64,
    pub calc_floor: f32,
    pub calc_span: f32,
    /// Radius, in native cells, over which calcification responses are spread.
    pub calc_cluster_cells: u32,
    pub mass_inner_radius: u32,
    pub mass_outer_radius: u32,
    pub mass_offset: f32,
    pub mass_span: f32,
    pub background_score: f32,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            tophat_radius: 3,
            calc_border: 4,
            calc_percentile: 99.5,
            calc_floor: 20.0,
            calc_span: 60.0,
            calc_cluster_cells: 2,
            mass_inner_radius: 12,
            mass_outer_radius: 64,
            mass_offset: 15.0,
            mass_span: 30.0,
            background_score: 0.02,
        }
    }
}

/// Inclusive prefix sums with a zero guard row and column.
struct Integral {
    w: usize,
    sums: Vec<f64>,
}

impl Integral {
    fn new(values: impl Iterator<Item = f64>, w: usize, h: usize) -> Self {
        let mut sums = vec![0.0; (w + 1) * (h + 1)];
        let mut it = values;
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += it.next().expect("w*h values");
                sums[(y + 1) * (w + 1) + x + 1] = sums[y * (w + 1) + x + 1] + row;
            }
        }
        Self { w, sums }
    }

    /// Sum over the clipped window `[x0, x1) x [y0, y1)`.
    fn window(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let s = |x: usize, y: usize| self.sums[y * (self.w + 1) + x];
        s(x1, y1) - s(x0, y1) - s(x1, y0) + s(x0, y0)
    }
}

/// Mean of masked pixels in a `(2r+1)^2` window, for every masked pixel.
fn masked_box_mean(values: &[f32], support: &[bool], w: usize, h: usize, r: usize) -> Vec<f32> {
    let vsum = Integral::new(values.iter().zip(support).map(|(&v, &m)| if m { v as f64 } else { 0.0 }), w, h);
    let count = Integral::new(support.iter().map(|&m| m as u8 as f64), w, h);
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(r), (y + r + 1).min(h));
        for x in 0..w {
            if !support[y * w + x] {
                continue;
            }
            let (x0, x1) = (x.saturating_sub(r), (x + r + 1).min(w));
            let n = count.window(x0, y0, x1, y1);
            out[y * w + x] = (vsum.window(x0, y0, x1, y1) / n) as f32;
        }
    }
    out
}

fn percentile(mut values: Vec<f32>, p: f64) -> f32 {
    if values.is_empty() {
        return 0.0;
    }
    let k = ((p / 100.0) * (values.len() - 1) as f64).round() as usize;
    let (_, v, _) = values.select_nth_unstable_by(k, f32::total_cmp);
    *v
}

/// Max-pools a canonical map onto the native grid.
fn max_pool(values: &[f32], w: usize, h: usize) -> Vec<f32> {
    let (nw, nh) = (NATIVE_WIDTH as usize, NATIVE_HEIGHT as usize);
    let (bx, by) = (w / nw, h / nh);
    let mut out = vec![0.0f32; nw * nh];
    for y in 0..h {
        let row = &values[y * w..(y + 1) * w];
        let orow = &mut out[(y / by) * nw..(y / by + 1) * nw];
        for (x, &v) in row.iter().enumerate() {
            let o = &mut orow[x / bx];
            *o = o.max(v);
        }
    }
    out
}

fn clamp_unit(v: f32) -> f32 {
    v.clamp(0.0, 1.0)
}

/// Maps and scores for a single view.
pub fn baseline_detect(pv: &PreprocessedView, cfg: &BaselineConfig) -> PredictionBundle {
    let (w, h) = (pv.image.width() as usize, pv.image.height() as usize);
    let img: Vec<f32> = pv.image.samples().iter().map(|&v| v as f32).collect();
    let support: Vec<bool> = pv.mask.bits().iter().zip(&img).map(|(&m, &v)| m && v > 0.0).collect();

    let interior = erode_disc(&BinaryMask::new(w as u32, h as u32, support.clone()), cfg.calc_border);
    let tophat = white_top_hat(&img, w, h, cfg.tophat_radius as usize);
    let inside: Vec<f32> = tophat.iter().zip(interior.bits()).filter(|(_, &m)| m).map(|(&t, _)| t).collect();
    let t0 = percentile(inside, cfg.calc_percentile).max(cfg.calc_floor);
    let calc: Vec<f32> = tophat
        .iter()
        .zip(interior.bits())
        .map(|(&t, &m)| if m { clamp_unit((t - t0) / cfg.calc_span) } else { 0.0 })
        .collect();

    let inner = masked_box_mean(&img, &support, w, h, cfg.mass_inner_radius as usize);
    let outer = masked_box_mean(&img, &support, w, h, cfg.mass_outer_radius as usize);
    let mass: Vec<f32> = inner
        .iter()
        .zip(&outer)
        .zip(&support)
        .map(|((&a, &b), &m)| if m { clamp_unit((a - b - cfg.mass_offset) / cfg.mass_span) } else { 0.0 })
        .collect();

    let background: Vec<f32> = support.iter().map(|&m| if m { cfg.background_score } else { 0.0 }).collect();
    let normal: Vec<f32> =
        (0..w * h).map(|i| if support[i] { 1.0 - calc[i].max(mass[i]).max(background[i]) } else { 0.0 }).collect();

    let (nw, nh) = (NATIVE_WIDTH as usize, NATIVE_HEIGHT as usize);
    let pooled_background = max_pool(&background, w, h);
    // Spread dot responses over the surrounding cells so a cluster reads as one region.
    let pooled_calc: Vec<f32> = max_filter(&max_pool(&calc, w, h), nw, nh, cfg.calc_cluster_cells as usize)
        .into_iter()
        .zip(&pooled_background)
        .map(|(v, &b)| if b > 0.0 { v } else { 0.0 })
        .collect();

    let mut scores = BTreeMap::new();
    let mut maps = Vec::with_capacity(ModelNode::ALL.len());
    for node in ModelNode::ALL {
        let pooled = match node {
            ModelNode::SuspCalc => pooled_calc.clone(),
            ModelNode::SuspMass => max_pool(&mass, w, h),
            ModelNode::Normal => max_pool(&normal, w, h),
            _ => pooled_background.clone(),
        };
        scores.insert(node, pooled.iter().copied().fold(0.0f32, f32::max) as f64);
        maps.push(ProbabilityMap { node, view: pv.view, width: NATIVE_WIDTH, height: NATIVE_HEIGHT, values: pooled });
    }
    PredictionBundle { case_id: String::new(), node_scores: BTreeMap::from([(pv.view, scores)]), maps }
}

/// Runs the detector on every view and merges the results into one bundle.
pub fn baseline_case(case_id: &str, views: &[PreprocessedView], cfg: &BaselineConfig) -> PredictionBundle {
    let mut bundle = PredictionBundle { case_id: case_id.to_string(), ..Default::default() };
    for pv in views {
        bundle.merge(baseline_detect(pv, cfg));
    }
    bundle.maps.sort_by_key(|m| (m.view, m.node));
    bundle
}
