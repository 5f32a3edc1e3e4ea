//! Live study aggregates, recomputed from a snapshot of the logs on every request.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use mammo_core::study::{
    acceptance_rate_partial, auto_accept_ids, concordance_rate, latest_reviews, sus_score, AcceptanceSummary,
    ConcordanceRate, ConcordanceRecord, ReviewRecord, StudyError, SusResponse, SusSummary,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewerProgress {
    pub reviewer_id: String,
    pub done: u64,
    pub pending: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub total_cases: u64,
    pub auto_accepted: u64,
    /// Cases open for review.
    pub review_cases: u64,
    /// Lines in the review log, superseded ones included.
    pub review_records: u64,
    pub classification: Option<ConcordanceRate>,
    pub localization: Option<ConcordanceRate>,
    pub acceptance: AcceptanceSummary,
    pub progress: Vec<ReviewerProgress>,
}

/// `queue` maps each reviewer to the cases they are asked to grade.
pub fn study_summary(
    total_cases: u64,
    concordance: &[ConcordanceRecord],
    reviews: &[ReviewRecord],
    queue: &BTreeMap<String, Vec<String>>,
    level: f64,
) -> Result<StudySummary, StudyError> {
    let auto = auto_accept_ids(concordance);
    let (classification, localization) = if concordance.is_empty() {
        (None, None)
    } else {
        let cls: Vec<_> = concordance.iter().map(|r| r.classification).collect();
        let loc: Vec<_> = concordance.iter().map(|r| r.localization).collect();
        (Some(concordance_rate(&cls, level)?), Some(concordance_rate(&loc, level)?))
    };
    let acceptance = acceptance_rate_partial(reviews, &auto, total_cases, level)?;

    let latest = latest_reviews(reviews);
    let progress = queue
        .iter()
        .map(|(reviewer, cases)| {
            let done = cases.iter().filter(|c| latest.contains_key(&(reviewer.clone(), (*c).clone()))).count() as u64;
            ReviewerProgress { reviewer_id: reviewer.clone(), done, pending: cases.len() as u64 - done }
        })
        .collect();
    let review_cases = queue.values().flatten().collect::<BTreeSet<_>>().len() as u64;

    Ok(StudySummary {
        total_cases,
        auto_accepted: auto.len() as u64,
        review_cases,
        review_records: reviews.len() as u64,
        classification,
        localization,
        acceptance,
        progress,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SusOverview {
    pub responses: u64,
    pub summary: Option<SusSummary>,
}

pub fn sus_overview(responses: &[SusResponse], level: f64) -> Result<SusOverview, StudyError> {
    let summary = if responses.is_empty() { None } else { Some(sus_score(responses, level)?) };
    Ok(SusOverview { responses: responses.len() as u64, summary })
}
