//! Batch stages over a [`Store`]: ingest, preprocess, infer, concordance,
//! evaluate and report. Each per-case stage runs in parallel on the current
//! rayon pool and returns its outcome in case-id order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::imageio::load_raster;
use crate::inference::bundle::quantize_map;
use crate::inference::{aggregate_case, baseline_case, load_bundle, write_bundle, BaselineConfig, CaseAssessment};
use crate::manifest::Manifest;
use crate::metrics::{rasterize_lesions, RasterizedLesion};
use crate::preprocess::{preprocess_view, PreprocessConfig};
use crate::report::{build_report, write_report, EvalConfig, EvalReport, ReportFormat, ReportInputs};
use crate::store::{Store, StoreError};
use crate::study::{
    classify_concordance, localize_concordance, read_jsonl, read_sus_csv, write_jsonl, ConcordanceRecord, ReviewRecord,
};
use crate::types::{Case, ViewLabel};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("case {case_id}, view {view}: {message}")]
    View { case_id: String, view: ViewLabel, message: String },
    #[error("case {case_id}: {message}")]
    Case { case_id: String, message: String },
    #[error(transparent)]
    Report(#[from] crate::report::ReportError),
    #[error(transparent)]
    Study(#[from] crate::study::StudyError),
}

impl PipelineError {
    fn case(case_id: &str, e: impl std::fmt::Display) -> Self {
        PipelineError::Case { case_id: case_id.to_string(), message: e.to_string() }
    }
}

/// Shared flags for per-case stages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StageOptions {
    /// Recompute outputs that already exist.
    pub force: bool,
    /// Process every case and report all failures instead of stopping at the first.
    pub keep_going: bool,
}

#[derive(Debug, Default, PartialEq)]
pub struct StageSummary {
    pub processed: Vec<String>,
    pub skipped: Vec<String>,
    pub failed: Vec<(String, String)>,
}

enum Outcome {
    Done,
    Skipped,
}

fn run_cases(
    cases: &[Case],
    opts: StageOptions,
    work: impl Fn(&Case) -> Result<Outcome, PipelineError> + Sync,
) -> Result<StageSummary, PipelineError> {
    let mut sorted: Vec<&Case> = cases.iter().collect();
    sorted.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    let results: Vec<(String, Result<Outcome, PipelineError>)> =
        sorted.par_iter().map(|c| (c.case_id.clone(), work(c))).collect();

    let mut summary = StageSummary::default();
    for (id, r) in results {
        match r {
            Ok(Outcome::Done) => summary.processed.push(id),
            Ok(Outcome::Skipped) => summary.skipped.push(id),
            Err(e) => {
                if !opts.keep_going {
                    return Err(e);
                }
                summary.failed.push((id, e.to_string()));
            }
        }
    }
    Ok(summary)
}

/// Validates the manifest (views readable, polygons in bounds) and copies it into the store.
pub fn ingest(store: &Store, manifest_path: &Path) -> Result<Manifest, PipelineError> {
    // Absolute, so image paths stay valid wherever the store is used from.
    let manifest_path = manifest_path
        .canonicalize()
        .map_err(|source| StoreError::Io { path: manifest_path.display().to_string(), source })?;
    let manifest = Manifest::load(&manifest_path).map_err(StoreError::from)?;
    store.save_manifest(&manifest)?;
    Ok(manifest)
}

pub fn preprocess(
    store: &Store,
    manifest: &Manifest,
    cfg: &PreprocessConfig,
    opts: StageOptions,
) -> Result<StageSummary, PipelineError> {
    let summary = run_cases(&manifest.cases, opts, |case| {
        if !opts.force && store.has_preprocessed(&case.case_id) {
            return Ok(Outcome::Skipped);
        }
        let view_cfg = PreprocessConfig { max_input: case.max_input.unwrap_or(cfg.max_input), ..*cfg };
        for (&view, path) in &case.views {
            let err = |e: &dyn std::fmt::Display| PipelineError::View {
                case_id: case.case_id.clone(),
                view,
                message: e.to_string(),
            };
            let img = load_raster(path).map_err(|e| err(&e))?;
            let pv = preprocess_view(&img, view, &view_cfg).map_err(|e| err(&e))?;
            store.save_preprocessed(&case.case_id, &pv)?;
        }
        Ok(Outcome::Done)
    })?;
    store.write_json(&store.stage_config_path("preprocess"), cfg)?;
    Ok(summary)
}

/// Where predictions come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InferSource {
    Baseline(BaselineConfig),
    /// A directory holding one bundle sub-directory per case.
    Bundle(PathBuf),
}

pub fn infer(
    store: &Store,
    manifest: &Manifest,
    source: &InferSource,
    eval: &EvalConfig,
    opts: StageOptions,
) -> Result<StageSummary, PipelineError> {
    let summary = run_cases(&manifest.cases, opts, |case| {
        if !opts.force && store.has_assessment(&case.case_id) {
            return Ok(Outcome::Skipped);
        }
        let bundle = match source {
            InferSource::Baseline(bcfg) => {
                let views = ViewLabel::ALL
                    .into_iter()
                    .map(|v| store.load_preprocessed(&case.case_id, v))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut bundle = baseline_case(&case.case_id, &views, bcfg);
                // Match what a reload from disk would see.
                bundle.maps.iter_mut().for_each(|m| quantize_map(&mut m.values));
                write_bundle(&bundle, &store.bundles_dir()).map_err(|e| PipelineError::case(&case.case_id, e))?;
                bundle
            }
            InferSource::Bundle(dir) => {
                load_bundle(&dir.join(&case.case_id)).map_err(|e| PipelineError::case(&case.case_id, e))?
            }
        };
        let assessment = aggregate_case(&bundle, &eval.aggregate).map_err(|e| PipelineError::case(&case.case_id, e))?;
        store.save_assessment(&assessment)?;
        Ok(Outcome::Done)
    })?;
    store.write_json(&store.stage_config_path("infer"), source)?;
    Ok(summary)
}

pub fn load_assessments(store: &Store, manifest: &Manifest) -> Result<BTreeMap<String, CaseAssessment>, PipelineError> {
    manifest.cases.par_iter().map(|c| Ok((c.case_id.clone(), store.load_assessment(&c.case_id)?))).collect()
}

/// Ground-truth lesions of every case, mapped into the canonical frame.
pub fn load_lesions(
    store: &Store,
    manifest: &Manifest,
) -> Result<BTreeMap<String, Vec<RasterizedLesion>>, PipelineError> {
    manifest
        .cases
        .par_iter()
        .filter(|c| !c.gt_lesions.is_empty())
        .map(|c| {
            let transforms = store.load_transforms(&c.case_id)?;
            let lesions = rasterize_lesions(&c.case_id, &c.gt_lesions, &transforms)
                .map_err(|e| PipelineError::case(&c.case_id, e))?;
            Ok((c.case_id.clone(), lesions))
        })
        .collect()
}

/// Classification and localization concordance of one case. The model calls
/// a category positive when its case score reaches the binarisation threshold.
pub fn case_concordance(
    case: &Case,
    assessment: &CaseAssessment,
    lesions: &[RasterizedLesion],
    eval: &EvalConfig,
) -> Result<ConcordanceRecord, PipelineError> {
    let ai = assessment.positive_categories(&eval.aggregate.heatmap_thresholds);
    let classification = classify_concordance(&case.suspicious_categories(), &ai);
    let localization = localize_concordance(&case.case_id, lesions, &assessment.blobs, &eval.localization)?;
    Ok(ConcordanceRecord { case_id: case.case_id.clone(), classification, localization })
}

pub fn compute_concordance(
    manifest: &Manifest,
    assessments: &BTreeMap<String, CaseAssessment>,
    lesions: &BTreeMap<String, Vec<RasterizedLesion>>,
    eval: &EvalConfig,
) -> Result<Vec<ConcordanceRecord>, PipelineError> {
    let mut cases: Vec<&Case> = manifest.cases.iter().collect();
    cases.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    let empty = Vec::new();
    cases
        .par_iter()
        .map(|c| {
            let a = assessments.get(&c.case_id).ok_or_else(|| PipelineError::case(&c.case_id, "no assessment"))?;
            case_concordance(c, a, lesions.get(&c.case_id).unwrap_or(&empty), eval)
        })
        .collect()
}

/// Computes concordance for every case and writes `concordance.jsonl`.
pub fn concordance(
    store: &Store,
    manifest: &Manifest,
    eval: &EvalConfig,
) -> Result<Vec<ConcordanceRecord>, PipelineError> {
    let assessments = load_assessments(store, manifest)?;
    let lesions = load_lesions(store, manifest)?;
    let records = compute_concordance(manifest, &assessments, &lesions, eval)?;
    write_jsonl(&store.concordance_path(), &records)?;
    Ok(records)
}

fn upstream_config(store: &Store) -> Result<BTreeMap<String, serde_json::Value>, PipelineError> {
    let mut out = BTreeMap::new();
    for stage in ["preprocess", "infer"] {
        let p = store.stage_config_path(stage);
        if p.exists() {
            out.insert(stage.to_string(), store.read_json(&p)?);
        }
    }
    Ok(out)
}

/// Builds the report from everything currently in the store. Concordance,
/// reviews and SUS responses are included when their files exist.
pub fn evaluate(store: &Store, manifest: &Manifest, eval: &EvalConfig) -> Result<EvalReport, PipelineError> {
    let assessments = load_assessments(store, manifest)?;
    let lesions = load_lesions(store, manifest)?;
    let concordance: Vec<ConcordanceRecord> = read_jsonl(&store.concordance_path())?;
    let reviews: Vec<ReviewRecord> = read_jsonl(&store.reviews_path())?;
    let sus = if store.sus_path().exists() { read_sus_csv(&store.sus_path())? } else { Vec::new() };

    let mut cfg = eval.clone();
    cfg.upstream = upstream_config(store)?;
    let inputs = ReportInputs {
        dataset_id: &manifest.dataset_id,
        cases: &manifest.cases,
        assessments: &assessments,
        lesions: &lesions,
        concordance: &concordance,
        reviews: &reviews,
        sus: &sus,
    };
    Ok(build_report(&inputs, &cfg)?)
}

/// Evaluates and writes the report files to `out_dir`.
pub fn report(
    store: &Store,
    manifest: &Manifest,
    eval: &EvalConfig,
    out_dir: &Path,
    formats: &[ReportFormat],
) -> Result<(EvalReport, Vec<PathBuf>), PipelineError> {
    let report = evaluate(store, manifest, eval)?;
    let files = write_report(&report, out_dir, formats)?;
    Ok((report, files))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(id: &str) -> Case {
        Case {
            case_id: id.into(),
            views: BTreeMap::new(),
            birads: crate::types::Birads::B1,
            density: crate::types::Density::B,
            report_findings: Default::default(),
            gt_lesions: Vec::new(),
            truth_label: crate::types::TruthLabel::Normal,
            max_input: None,
        }
    }

    #[test]
    fn run_cases_orders_and_collects_failures() {
        let cases = vec![case("b"), case("a"), case("c")];
        let work = |c: &Case| match c.case_id.as_str() {
            "a" => Ok(Outcome::Skipped),
            "b" => Err(PipelineError::case("b", "boom")),
            _ => Ok(Outcome::Done),
        };
        let s = run_cases(&cases, StageOptions { keep_going: true, ..Default::default() }, work).unwrap();
        assert_eq!(s.skipped, ["a"]);
        assert_eq!(s.processed, ["c"]);
        assert_eq!(s.failed.len(), 1);
        assert_eq!(s.failed[0].0, "b");
        assert!(run_cases(&cases, StageOptions::default(), work).is_err());
    }
}
