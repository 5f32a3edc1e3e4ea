//! Lesion/blob matching and the LLF, NLF, IoGT and IoHM summaries.
//!
//! Only suspicious lesions and suspicious blobs take part. Lesions and blobs
//! are compared within the same view. A lesion is hit when the union of blobs
//! covers at least `tau_hit` of it; a blob is a false positive when less than
//! `tau_fp` of it lies on the union of lesions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::binomial::{clopper_pearson, BinomialCi, Interval};
use super::bootstrap::{percentile_interval, replicate_rng, BootstrapConfig};
use super::MetricsError;
use crate::geometry::{rasterize_region, transform_region};
use crate::inference::HeatmapBlob;
use crate::types::{FinalCategory, Frame, GroundTruthLesion, PixelSet, TransformRecord, ViewLabel, CANONICAL_WIDTH};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalizationConfig {
    pub tau_hit: f64,
    pub tau_fp: f64,
}

impl Default for LocalizationConfig {
    fn default() -> Self {
        Self { tau_hit: 0.5, tau_fp: 0.25 }
    }
}

/// Restricts matching to one category; `None` is the category-agnostic Cancer row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LocalizationFilter {
    pub category: Option<FinalCategory>,
}

impl LocalizationFilter {
    pub fn all() -> Self {
        Self { category: None }
    }

    pub fn category(c: FinalCategory) -> Self {
        Self { category: Some(c) }
    }

    fn admits(&self, category: FinalCategory, suspicious: bool) -> bool {
        suspicious && self.category.is_none_or(|c| c == category)
    }
}

/// A ground-truth lesion rasterised in the canonical frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterizedLesion {
    pub view: ViewLabel,
    pub category: FinalCategory,
    pub suspicious: bool,
    pub pixels: PixelSet,
}

/// Rasterises every lesion of a case, mapping original-frame polygons through
/// the view's transform first.
pub fn rasterize_lesions(
    case_id: &str,
    lesions: &[GroundTruthLesion],
    transforms: &BTreeMap<ViewLabel, TransformRecord>,
) -> Result<Vec<RasterizedLesion>, MetricsError> {
    lesions
        .iter()
        .enumerate()
        .map(|(index, l)| {
            let geo = |source| MetricsError::Geometry { case_id: case_id.to_string(), index, source };
            let region = match l.region.frame {
                Frame::Canonical => l.region.clone(),
                Frame::Original => {
                    let rec = transforms
                        .get(&l.view)
                        .ok_or_else(|| MetricsError::MissingTransform { case_id: case_id.to_string(), view: l.view })?;
                    transform_region(&l.region, rec).map_err(geo)?
                }
            };
            let pixels = rasterize_region(&region).map_err(geo)?;
            if pixels.is_empty() {
                return Err(MetricsError::EmptyGeometry { case_id: case_id.to_string(), index });
            }
            Ok(RasterizedLesion { view: l.view, category: l.category, suspicious: l.suspicious, pixels })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LesionMatch {
    pub index: usize,
    pub view: ViewLabel,
    pub category: FinalCategory,
    pub area: usize,
    pub iogt: f64,
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobMatch {
    pub index: usize,
    pub view: ViewLabel,
    pub category: FinalCategory,
    pub area: usize,
    pub iohm: f64,
    pub is_fp: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationCaseResult {
    pub case_id: String,
    pub lesions: Vec<LesionMatch>,
    pub blobs: Vec<BlobMatch>,
    pub image_count: u64,
}

impl LocalizationCaseResult {
    pub fn hits(&self) -> u64 {
        self.lesions.iter().filter(|l| l.hit).count() as u64
    }

    pub fn false_positives(&self) -> u64 {
        self.blobs.iter().filter(|b| b.is_fp).count() as u64
    }
}

/// Matches one case's lesions against its blobs. Indices in the result refer
/// to positions in the input slices.
pub fn match_lesions(
    case_id: &str,
    lesions: &[RasterizedLesion],
    blobs: &[HeatmapBlob],
    image_count: u64,
    filter: LocalizationFilter,
    cfg: &LocalizationConfig,
) -> Result<LocalizationCaseResult, MetricsError> {
    if let Some(index) = lesions.iter().position(|l| l.pixels.is_empty()) {
        return Err(MetricsError::EmptyGeometry { case_id: case_id.to_string(), index });
    }
    let kept_lesions: Vec<(usize, &RasterizedLesion)> =
        lesions.iter().enumerate().filter(|(_, l)| filter.admits(l.category, l.suspicious)).collect();
    let kept_blobs: Vec<(usize, &HeatmapBlob)> =
        blobs.iter().enumerate().filter(|(_, b)| filter.admits(b.category, b.suspicious)).collect();

    let mut blob_union: BTreeMap<ViewLabel, PixelSet> = BTreeMap::new();
    let mut lesion_union: BTreeMap<ViewLabel, PixelSet> = BTreeMap::new();
    for view in ViewLabel::ALL {
        let bs = kept_blobs.iter().filter(|(_, b)| b.view == view).map(|(_, b)| &b.pixels);
        blob_union.insert(view, PixelSet::union(CANONICAL_WIDTH, bs));
        let ls = kept_lesions.iter().filter(|(_, l)| l.view == view).map(|(_, l)| &l.pixels);
        lesion_union.insert(view, PixelSet::union(CANONICAL_WIDTH, ls));
    }

    let lesions_out = kept_lesions
        .iter()
        .map(|&(index, l)| {
            let area = l.pixels.len();
            let iogt = l.pixels.intersection_len(&blob_union[&l.view]) as f64 / area as f64;
            LesionMatch { index, view: l.view, category: l.category, area, iogt, hit: iogt >= cfg.tau_hit }
        })
        .collect();
    let blobs_out = kept_blobs
        .iter()
        .map(|&(index, b)| {
            let area = b.pixels.len();
            let iohm =
                if area == 0 { 0.0 } else { b.pixels.intersection_len(&lesion_union[&b.view]) as f64 / area as f64 };
            BlobMatch { index, view: b.view, category: b.category, area, iohm, is_fp: iohm < cfg.tau_fp }
        })
        .collect();

    Ok(LocalizationCaseResult { case_id: case_id.to_string(), lesions: lesions_out, blobs: blobs_out, image_count })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationSummary {
    pub lesions: u64,
    pub hits: u64,
    /// Absent when there are no lesions.
    pub llf: Option<BinomialCi<f64>>,
    pub false_positives: u64,
    pub images: u64,
    pub cases: u64,
    /// False positives per image, with a case-resampling percentile interval.
    pub nlf: Interval<f64>,
    pub false_positives_per_case: f64,
    pub mean_iogt: Option<f64>,
    pub mean_iohm: Option<f64>,
}

/// Mean IoGT over hit lesions and mean IoHM over non-FP blobs.
pub fn mean_overlap(results: &[LocalizationCaseResult]) -> (Option<f64>, Option<f64>) {
    let mean = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let iogt = results.iter().flat_map(|r| &r.lesions).filter(|l| l.hit).map(|l| l.iogt).collect();
    let iohm = results.iter().flat_map(|r| &r.blobs).filter(|b| !b.is_fp).map(|b| b.iohm).collect();
    (mean(iogt), mean(iohm))
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn llf_nlf(
    results: &[LocalizationCaseResult],
    level: f64,
    boot: &BootstrapConfig,
) -> Result<LocalizationSummary, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if boot.reps == 0 {
        return Err(MetricsError::NoReplicates);
    }
    let lesions: u64 = results.iter().map(|r| r.lesions.len() as u64).sum();
    let hits: u64 = results.iter().map(|r| r.hits()).sum();
    let fps: Vec<u64> = results.iter().map(|r| r.false_positives()).collect();
    let imgs: Vec<u64> = results.iter().map(|r| r.image_count).collect();
    let (fp_total, img_total) = (fps.iter().sum::<u64>(), imgs.iter().sum::<u64>());

    let llf = if lesions > 0 { Some(clopper_pearson(hits, lesions, level)?) } else { None };

    use rand::Rng;
    use rayon::prelude::*;
    let n = results.len();
    let mut reps: Vec<f64> = (0..boot.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_rng(boot.seed, rep);
            let (mut f, mut i) = (0u64, 0u64);
            for _ in 0..n {
                let k = rng.random_range(0..n);
                f += fps[k];
                i += imgs[k];
            }
            ratio(f, i)
        })
        .collect();
    let (lower, upper) = percentile_interval(&mut reps, level)?;
    let (mean_iogt, mean_iohm) = mean_overlap(results);

    Ok(LocalizationSummary {
        lesions,
        hits,
        llf,
        false_positives: fp_total,
        images: img_total,
        cases: n as u64,
        nlf: Interval { estimate: ratio(fp_total, img_total), lower, upper, level },
        false_positives_per_case: ratio(fp_total, n as u64),
        mean_iogt,
        mean_iohm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ModelNode;

    fn rect(x0: u32, y0: u32, w: u32, h: u32) -> PixelSet {
        PixelSet::from_points(CANONICAL_WIDTH, (y0..y0 + h).flat_map(|y| (x0..x0 + w).map(move |x| (x, y))))
    }

    fn lesion(pixels: PixelSet) -> RasterizedLesion {
        RasterizedLesion { view: ViewLabel::LCC, category: FinalCategory::Mass, suspicious: true, pixels }
    }

    fn blob(pixels: PixelSet) -> HeatmapBlob {
        HeatmapBlob {
            view: ViewLabel::LCC,
            node: ModelNode::SuspMass,
            category: FinalCategory::Mass,
            suspicious: true,
            pixels,
            peak_score: 0.9,
        }
    }

    fn run(lesions: &[RasterizedLesion], blobs: &[HeatmapBlob]) -> LocalizationCaseResult {
        match_lesions("c", lesions, blobs, 4, LocalizationFilter::all(), &LocalizationConfig::default()).unwrap()
    }

    #[test]
    fn partial_overlap_is_hit_and_not_fp() {
        // 10x10 lesion; blob is 10 wide, 6 rows inside the lesion and 4 rows below it.
        let r = run(&[lesion(rect(100, 100, 10, 10))], &[blob(rect(100, 104, 10, 10))]);
        assert_eq!(r.lesions[0].iogt, 0.6);
        assert!(r.lesions[0].hit);
        assert_eq!(r.blobs[0].iohm, 0.6);
        assert!(!r.blobs[0].is_fp);
    }

    #[test]
    fn disjoint_blob_is_fp() {
        let r = run(&[lesion(rect(100, 100, 10, 10))], &[blob(rect(500, 500, 5, 5))]);
        assert_eq!(r.blobs[0].iohm, 0.0);
        assert!(r.blobs[0].is_fp);
        assert!(!r.lesions[0].hit);
    }

    #[test]
    fn no_blobs_misses_everything() {
        let r = run(&[lesion(rect(0, 0, 4, 4)), lesion(rect(10, 10, 4, 4))], &[]);
        assert_eq!(r.hits(), 0);
        assert_eq!(r.false_positives(), 0);
    }

    #[test]
    fn other_views_do_not_count() {
        let mut b = blob(rect(100, 100, 10, 10));
        b.view = ViewLabel::RCC;
        let r = run(&[lesion(rect(100, 100, 10, 10))], &[b]);
        assert!(!r.lesions[0].hit);
        assert!(r.blobs[0].is_fp);
    }

    #[test]
    fn benign_items_are_ignored() {
        let mut b = blob(rect(0, 0, 3, 3));
        b.suspicious = false;
        let mut l = lesion(rect(50, 50, 3, 3));
        l.suspicious = false;
        let r = run(&[l], &[b]);
        assert!(r.lesions.is_empty() && r.blobs.is_empty());
    }

    #[test]
    fn empty_lesion_is_an_error() {
        let err = match_lesions(
            "c",
            &[lesion(PixelSet::from_indices(CANONICAL_WIDTH, vec![]))],
            &[],
            4,
            LocalizationFilter::all(),
            &LocalizationConfig::default(),
        );
        assert!(matches!(err, Err(MetricsError::EmptyGeometry { .. })));
    }

    fn synthetic(lesions: usize, hits: usize, fps: usize, images: u64) -> LocalizationCaseResult {
        LocalizationCaseResult {
            case_id: "x".into(),
            lesions: (0..lesions)
                .map(|i| LesionMatch {
                    index: i,
                    view: ViewLabel::LCC,
                    category: FinalCategory::Mass,
                    area: 1,
                    iogt: if i < hits { 1.0 } else { 0.0 },
                    hit: i < hits,
                })
                .collect(),
            blobs: (0..fps)
                .map(|i| BlobMatch {
                    index: i,
                    view: ViewLabel::LCC,
                    category: FinalCategory::Mass,
                    area: 1,
                    iohm: 0.0,
                    is_fp: true,
                })
                .collect(),
            image_count: images,
        }
    }

    #[test]
    fn fractions_follow_their_definitions() {
        let boot = BootstrapConfig::default();
        let s = llf_nlf(&[synthetic(3, 2, 0, 1)], 0.95, &boot).unwrap();
        assert_eq!(s.llf.unwrap().estimate, 2.0 / 3.0);
        let s = llf_nlf(&[synthetic(0, 0, 1, 1), synthetic(0, 0, 2, 1)], 0.95, &boot).unwrap();
        assert_eq!(s.nlf.estimate, 1.5);
        assert!(s.llf.is_none());
        assert!(s.nlf.lower <= 1.5 && 1.5 <= s.nlf.upper);
    }

    #[test]
    fn mean_overlap_cases() {
        let mut r = synthetic(2, 2, 0, 4);
        r.lesions[0].iogt = 0.4;
        r.lesions[1].iogt = 0.8;
        assert!((mean_overlap(&[r]).0.unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(mean_overlap(&[synthetic(2, 0, 0, 4)]).0, None);
    }

    #[test]
    fn bootstrap_is_reproducible() {
        let rs: Vec<_> = (0..10).map(|i| synthetic(2, i % 3, i % 4, 4)).collect();
        let boot = BootstrapConfig { reps: 500, seed: 9 };
        assert_eq!(llf_nlf(&rs, 0.95, &boot).unwrap(), llf_nlf(&rs, 0.95, &boot).unwrap());
    }
}
