//! Reader-study statistics: concordance, acceptance and usability.

pub mod acceptance;
pub mod concordance;
pub mod io;
pub mod sus;

pub use acceptance::{
    acceptance_from_counts, acceptance_rate, acceptance_rate_partial, latest_reviews, round_half_up, AcceptanceSummary,
    ReviewRecord, ReviewerAcceptance,
};
pub use concordance::{
    classify_concordance, concordance_rate, localization_category, localize_concordance, rate_from_counts,
    CategoryCounts, ConcordanceCategory, ConcordanceRate,
};
pub use io::{append_jsonl, auto_accept_ids, read_jsonl, read_sus_csv, write_jsonl, write_sus_csv, ConcordanceRecord};
pub use sus::{sus_score, SusResponse, SusSummary, SUS_ITEMS};

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error("nothing to summarise")]
    EmptyInput,
    #[error("case {case_id}, reviewer {reviewer_id}: grade {grade} is outside 1-4")]
    InvalidGrade { case_id: String, reviewer_id: String, grade: u8 },
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("case {case_id} was auto-accepted but reviewed by {reviewer_id}")]
    OverlapWithAutoAccept { case_id: String, reviewer_id: String },
    #[error("reviewer {reviewer_id} graded a different set of cases")]
    InconsistentCaseSets { reviewer_id: String },
    #[error("{accepted} accepted cases exceed the total of {total_cases}")]
    TooManyAccepted { accepted: f64, total_cases: u64 },
    #[error("participant {participant_id}: {got} items, expected 10")]
    BadItemCount { participant_id: String, got: usize },
    #[error("participant {participant_id}: item {item} has value {value}, expected 1-5")]
    BadItemValue { participant_id: String, item: usize, value: u8 },
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {source}")]
    Parse { path: String, line: usize, source: serde_json::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
}
