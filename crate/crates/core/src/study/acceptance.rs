//! Usefulness grades and acceptance rates.
//!
//! Cases where the model agreed with the report on both classification and
//! localization are accepted without review. Every other case gets a 1-4
//! grade from each reviewer; 2 or above counts as accepted.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::concordance::ConcordanceCategory;
use super::StudyError;
use crate::metrics::{clopper_pearson, BinomialCi};

pub const MIN_GRADE: u8 = 1;
pub const MAX_GRADE: u8 = 4;
pub const ACCEPT_GRADE: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub case_id: String,
    pub reviewer_id: String,
    pub grade: u8,
    pub classification: ConcordanceCategory,
    pub localization: ConcordanceCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl ReviewRecord {
    pub fn validate(&self) -> Result<(), StudyError> {
        if !(MIN_GRADE..=MAX_GRADE).contains(&self.grade) {
            return Err(StudyError::InvalidGrade {
                case_id: self.case_id.clone(),
                reviewer_id: self.reviewer_id.clone(),
                grade: self.grade,
            });
        }
        if self.case_id.is_empty() || self.reviewer_id.is_empty() {
            return Err(StudyError::MissingField(if self.case_id.is_empty() { "case_id" } else { "reviewer_id" }));
        }
        Ok(())
    }

    pub fn accepted(&self) -> bool {
        self.grade >= ACCEPT_GRADE
    }
}

/// Latest record per `(reviewer, case)`; later lines supersede earlier ones.
pub fn latest_reviews(reviews: &[ReviewRecord]) -> BTreeMap<(String, String), &ReviewRecord> {
    let mut out = BTreeMap::new();
    for r in reviews {
        out.insert((r.reviewer_id.clone(), r.case_id.clone()), r);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewerAcceptance {
    pub reviewer_id: String,
    pub reviewed: u64,
    pub accepted_reviewed: u64,
    pub accepted_total: u64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceSummary {
    pub total_cases: u64,
    pub auto_accepted: u64,
    pub reviewers: Vec<ReviewerAcceptance>,
    /// Mean accepted count across reviewers (may be fractional).
    pub mean_accepted: f64,
    pub rate: f64,
    /// Interval on the half-up rounded mean.
    pub ci: BinomialCi<f64>,
}

pub fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor() as u64
}

/// Acceptance from mean counts, for when only aggregates are known.
pub fn acceptance_from_counts(
    auto_accepted: u64,
    mean_reviewed_accepts: f64,
    total_cases: u64,
    level: f64,
) -> Result<(f64, BinomialCi<f64>), StudyError> {
    let accepted = auto_accepted as f64 + mean_reviewed_accepts;
    if total_cases == 0 || accepted > total_cases as f64 || mean_reviewed_accepts < 0.0 {
        return Err(StudyError::TooManyAccepted { accepted, total_cases });
    }
    let ci = clopper_pearson(round_half_up(accepted), total_cases, level)?;
    Ok((accepted / total_cases as f64, ci))
}

/// Strict acceptance rate: reviewed cases must be disjoint from the
/// auto-accepted set and every reviewer must have graded the same cases.
pub fn acceptance_rate(
    reviews: &[ReviewRecord],
    auto_accept_ids: &BTreeSet<String>,
    total_cases: u64,
    level: f64,
) -> Result<AcceptanceSummary, StudyError> {
    summarise(reviews, auto_accept_ids, total_cases, level, true)
}

/// Lenient variant for a study in progress: reviews of auto-accepted cases
/// are ignored and reviewers may have graded different subsets.
pub fn acceptance_rate_partial(
    reviews: &[ReviewRecord],
    auto_accept_ids: &BTreeSet<String>,
    total_cases: u64,
    level: f64,
) -> Result<AcceptanceSummary, StudyError> {
    summarise(reviews, auto_accept_ids, total_cases, level, false)
}

fn summarise(
    reviews: &[ReviewRecord],
    auto: &BTreeSet<String>,
    total_cases: u64,
    level: f64,
    strict: bool,
) -> Result<AcceptanceSummary, StudyError> {
    for r in reviews {
        r.validate()?;
    }
    let mut per_reviewer: BTreeMap<&str, BTreeMap<&str, bool>> = BTreeMap::new();
    for ((_, _), r) in latest_reviews(reviews) {
        if auto.contains(&r.case_id) {
            if strict {
                return Err(StudyError::OverlapWithAutoAccept {
                    case_id: r.case_id.clone(),
                    reviewer_id: r.reviewer_id.clone(),
                });
            }
            continue;
        }
        per_reviewer.entry(&r.reviewer_id).or_default().insert(&r.case_id, r.accepted());
    }
    if strict {
        let mut sets = per_reviewer.iter().map(|(id, cases)| (*id, cases.keys().collect::<BTreeSet<_>>()));
        if let Some((_, first)) = sets.next() {
            if let Some((id, _)) = sets.find(|(_, s)| *s != first) {
                return Err(StudyError::InconsistentCaseSets { reviewer_id: id.to_string() });
            }
        }
    }

    let auto_n = auto.len() as u64;
    let mut reviewers = Vec::with_capacity(per_reviewer.len());
    for (id, cases) in &per_reviewer {
        let accepted_reviewed = cases.values().filter(|&&a| a).count() as u64;
        let accepted_total = auto_n + accepted_reviewed;
        if auto_n + cases.len() as u64 > total_cases {
            return Err(StudyError::TooManyAccepted { accepted: (auto_n + cases.len() as u64) as f64, total_cases });
        }
        reviewers.push(ReviewerAcceptance {
            reviewer_id: id.to_string(),
            reviewed: cases.len() as u64,
            accepted_reviewed,
            accepted_total,
            rate: accepted_total as f64 / total_cases as f64,
        });
    }
    let mean_reviewed = if reviewers.is_empty() {
        0.0
    } else {
        reviewers.iter().map(|r| r.accepted_reviewed as f64).sum::<f64>() / reviewers.len() as f64
    };
    let (rate, ci) = acceptance_from_counts(auto_n, mean_reviewed, total_cases, level)?;
    Ok(AcceptanceSummary {
        total_cases,
        auto_accepted: auto_n,
        reviewers,
        mean_accepted: auto_n as f64 + mean_reviewed,
        rate,
        ci,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn review(reviewer: &str, case: usize, grade: u8) -> ReviewRecord {
        ReviewRecord {
            case_id: format!("c{case}"),
            reviewer_id: reviewer.into(),
            grade,
            classification: ConcordanceCategory::Edit,
            localization: ConcordanceCategory::Edit,
            timestamp: None,
        }
    }

    fn auto(ids: impl IntoIterator<Item = usize>) -> BTreeSet<String> {
        ids.into_iter().map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn two_reviewers_average_to_half_cases() {
        // 423 auto-accepted, 460 reviewed; reviewers accept 430 and 431.
        let mut log = Vec::new();
        for i in 423..883 {
            log.push(review("a", i, if i < 423 + 430 { 3 } else { 1 }));
            log.push(review("b", i, if i < 423 + 431 { 2 } else { 1 }));
        }
        let s = acceptance_rate(&log, &auto(0..423), 883, 0.95).unwrap();
        assert_eq!(s.mean_accepted, 853.5);
        assert_eq!(s.ci.successes, 854);
        assert!((s.rate - 0.967).abs() < 5e-4);
        assert!((s.ci.lower - 0.953).abs() < 2e-3 && (s.ci.upper - 0.977).abs() < 2e-3);
    }

    #[test]
    fn all_ones_without_auto_is_zero() {
        let log: Vec<_> = (0..5).map(|i| review("a", i, 1)).collect();
        let s = acceptance_rate(&log, &BTreeSet::new(), 5, 0.95).unwrap();
        assert_eq!(s.rate, 0.0);
        assert_eq!(s.ci.lower, 0.0);
    }

    #[test]
    fn superseded_grades_do_not_count() {
        let log = vec![review("a", 0, 1), review("a", 0, 4)];
        let s = acceptance_rate(&log, &BTreeSet::new(), 1, 0.95).unwrap();
        assert_eq!(s.reviewers[0].accepted_reviewed, 1);
    }

    #[test]
    fn strict_mode_rejects_overlap_and_mismatch() {
        let log = vec![review("a", 0, 3)];
        assert!(matches!(acceptance_rate(&log, &auto([0]), 2, 0.95), Err(StudyError::OverlapWithAutoAccept { .. })));
        let log = vec![review("a", 0, 3), review("b", 1, 3)];
        assert!(matches!(
            acceptance_rate(&log, &BTreeSet::new(), 2, 0.95),
            Err(StudyError::InconsistentCaseSets { .. })
        ));
        assert!(acceptance_rate_partial(&log, &auto([0]), 2, 0.95).is_ok());
    }

    #[test]
    fn empty_log_counts_auto_accepts_only() {
        let s = acceptance_rate(&[], &auto(0..3), 10, 0.95).unwrap();
        assert_eq!(s.rate, 0.3);
        assert!(s.reviewers.is_empty());
    }

    #[test]
    fn grade_out_of_range() {
        assert!(matches!(review("a", 0, 7).validate(), Err(StudyError::InvalidGrade { grade: 7, .. })));
        assert!(review("a", 0, 0).validate().is_err());
    }
}
