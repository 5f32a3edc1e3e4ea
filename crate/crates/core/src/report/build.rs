use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::{
    ConcordanceSection, Condition, DetectionRow, EvalConfig, EvalReport, LocalizationRow, ReportError, RocSeries,
    ThresholdSource, TOOL_VERSION,
};
use crate::inference::CaseAssessment;
use crate::metrics::{
    auroc, bootstrap_auroc_ci, confusion_and_rates, llf_nlf, match_lesions, optimal_operating_point, roc_curve,
    Interval, LocalizationFilter, RasterizedLesion,
};
use crate::study::{
    acceptance_rate, auto_accept_ids, concordance_rate, sus_score, ConcordanceRecord, ReviewRecord, SusResponse,
};
use crate::types::{Case, TruthLabel, ViewLabel};

pub struct ReportInputs<'a> {
    pub dataset_id: &'a str,
    pub cases: &'a [Case],
    pub assessments: &'a BTreeMap<String, CaseAssessment>,
    /// Canonical-frame lesions per case; cases without an entry have none.
    pub lesions: &'a BTreeMap<String, Vec<RasterizedLesion>>,
    pub concordance: &'a [ConcordanceRecord],
    pub reviews: &'a [ReviewRecord],
    pub sus: &'a [SusResponse],
}

fn label(case: &Case, condition: Condition) -> bool {
    match condition.category() {
        None => case.truth_label == TruthLabel::Malignant,
        Some(c) => case.suspicious_categories().contains(&c),
    }
}

fn score(a: &CaseAssessment, condition: Condition) -> f64 {
    match condition.category() {
        None => a.cancer_score,
        Some(c) => a.breast_scores.case_score(c),
    }
}

fn detection_row(
    condition: Condition,
    scores: &[f64],
    labels: &[bool],
    cfg: &EvalConfig,
) -> Result<(DetectionRow, Option<RocSeries>), ReportError> {
    let positives = labels.iter().filter(|&&l| l).count() as u64;
    let negatives = labels.len() as u64 - positives;
    let two_class = positives > 0 && negatives > 0;

    let (auc, roc, youden) = if two_class {
        let curve = roc_curve(scores, labels)?;
        let boot = bootstrap_auroc_ci(scores, labels, cfg.level, &cfg.bootstrap)?;
        let est = auroc(&curve);
        let op = optimal_operating_point(&curve);
        let auc = Interval { estimate: est, ..boot };
        (Some(auc), Some(RocSeries { condition, points: curve.points }), Some(op.threshold))
    } else {
        (None, None, None)
    };

    let (threshold, threshold_source) = match (cfg.operating_thresholds.get(&condition), youden) {
        (Some(&t), _) => {
            if !(0.0..=1.0).contains(&t) {
                return Err(ReportError::BadThreshold { condition, value: t });
            }
            (Some(t), ThresholdSource::Fixed)
        }
        // `+inf`: the curve origin won, so nothing is called positive.
        (None, Some(t)) => (t.is_finite().then_some(t), ThresholdSource::Youden),
        (None, None) => (Some(cfg.fallback_threshold), ThresholdSource::Fallback),
    };
    let (counts, rates) = confusion_and_rates(scores, labels, threshold.unwrap_or(f64::INFINITY), cfg.level)?;
    Ok((
        DetectionRow {
            condition,
            positives,
            negatives,
            auroc: auc,
            threshold,
            threshold_source,
            counts,
            ppv: rates.ppv,
            npv: rates.npv,
            sensitivity: rates.sensitivity,
            specificity: rates.specificity,
        },
        roc,
    ))
}

/// Builds the full report. Cases are processed in case-id order so the
/// output does not depend on input order or scheduling.
pub fn build_report(inputs: &ReportInputs<'_>, cfg: &EvalConfig) -> Result<EvalReport, ReportError> {
    let mut cases: Vec<&Case> = inputs.cases.iter().collect();
    cases.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    let mut seen = BTreeSet::new();
    for c in &cases {
        if !seen.insert(&c.case_id) {
            return Err(ReportError::DuplicateCase(c.case_id.clone()));
        }
    }
    let assessments: Vec<&CaseAssessment> = cases
        .iter()
        .map(|c| inputs.assessments.get(&c.case_id).ok_or_else(|| ReportError::MissingAssessment(c.case_id.clone())))
        .collect::<Result<_, _>>()?;

    let mut detection = Vec::new();
    let mut roc = Vec::new();
    for condition in Condition::ALL {
        let scores: Vec<f64> = assessments.iter().map(|a| score(a, condition)).collect();
        let labels: Vec<bool> = cases.iter().map(|c| label(c, condition)).collect();
        let (row, series) = detection_row(condition, &scores, &labels, cfg)?;
        detection.push(row);
        roc.extend(series);
    }

    let empty = Vec::new();
    let localization = Condition::ALL
        .into_iter()
        .map(|condition| {
            let filter = LocalizationFilter { category: condition.category() };
            let results = cases
                .par_iter()
                .zip(assessments.par_iter())
                .map(|(c, a)| {
                    let lesions = inputs.lesions.get(&c.case_id).unwrap_or(&empty);
                    match_lesions(&c.case_id, lesions, &a.blobs, ViewLabel::ALL.len() as u64, filter, &cfg.localization)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let summary = llf_nlf(&results, cfg.level, &cfg.bootstrap)?;
            Ok(LocalizationRow { condition, summary })
        })
        .collect::<Result<Vec<_>, ReportError>>()?;

    let concordance = if inputs.concordance.is_empty() {
        None
    } else {
        let mut recs: Vec<&ConcordanceRecord> = inputs.concordance.iter().collect();
        recs.sort_by(|a, b| a.case_id.cmp(&b.case_id));
        let cls: Vec<_> = recs.iter().map(|r| r.classification).collect();
        let loc: Vec<_> = recs.iter().map(|r| r.localization).collect();
        Some(ConcordanceSection {
            classification: concordance_rate(&cls, cfg.level)?,
            localization: concordance_rate(&loc, cfg.level)?,
        })
    };

    let acceptance = if inputs.reviews.is_empty() {
        None
    } else {
        let auto = auto_accept_ids(inputs.concordance);
        Some(acceptance_rate(inputs.reviews, &auto, cases.len() as u64, cfg.level)?)
    };

    let sus = if inputs.sus.is_empty() { None } else { Some(sus_score(inputs.sus, cfg.level)?) };

    Ok(EvalReport {
        dataset_id: inputs.dataset_id.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        config: cfg.clone(),
        cases: cases.len() as u64,
        detection,
        roc,
        localization,
        concordance,
        acceptance,
        sus,
    })
}
