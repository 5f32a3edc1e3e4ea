//! Assembles detection, localization and study results into one report.

pub mod build;
pub mod write;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use build::{build_report, ReportInputs};
pub use write::{render_markdown, write_report, ReportFormat, REPORT_FILES};

use crate::inference::AggregateConfig;
use crate::metrics::{
    BinomialCi, BootstrapConfig, ConfusionCounts, Interval, LocalizationConfig, LocalizationSummary, RocPoint,
};
use crate::study::{AcceptanceSummary, ConcordanceRate, SusSummary};
use crate::types::FinalCategory;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A report row: overall cancer detection or one lesion category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    Cancer,
    Calcification,
    Mass,
    Other,
}

impl Condition {
    pub const ALL: [Condition; 4] = [Condition::Cancer, Condition::Calcification, Condition::Mass, Condition::Other];

    pub fn category(self) -> Option<FinalCategory> {
        match self {
            Condition::Cancer => None,
            Condition::Calcification => Some(FinalCategory::Calcification),
            Condition::Mass => Some(FinalCategory::Mass),
            Condition::Other => Some(FinalCategory::Other),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Cancer => "Cancer",
            Condition::Calcification => "Calcification",
            Condition::Mass => "Mass",
            Condition::Other => "Other",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything that determines the numbers in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub level: f64,
    /// Fixed operating thresholds; conditions not listed use the Youden point.
    pub operating_thresholds: BTreeMap<Condition, f64>,
    /// Used when a condition has a single class and no ROC curve exists.
    pub fallback_threshold: f64,
    pub aggregate: AggregateConfig,
    pub localization: LocalizationConfig,
    pub bootstrap: BootstrapConfig,
    /// Settings of upstream stages, recorded verbatim.
    pub upstream: BTreeMap<String, serde_json::Value>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            level: 0.95,
            operating_thresholds: BTreeMap::new(),
            fallback_threshold: 0.5,
            aggregate: AggregateConfig::default(),
            localization: LocalizationConfig::default(),
            bootstrap: BootstrapConfig::default(),
            upstream: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    Youden,
    Fixed,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub condition: Condition,
    pub positives: u64,
    pub negatives: u64,
    pub auroc: Option<Interval<f64>>,
    /// Predict positive iff `score >= threshold`; `None` predicts nothing positive.
    pub threshold: Option<f64>,
    pub threshold_source: ThresholdSource,
    pub counts: ConfusionCounts,
    pub ppv: Option<BinomialCi<f64>>,
    pub npv: Option<BinomialCi<f64>>,
    pub sensitivity: Option<BinomialCi<f64>>,
    pub specificity: Option<BinomialCi<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocSeries {
    pub condition: Condition,
    pub points: Vec<RocPoint<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRow {
    pub condition: Condition,
    pub summary: LocalizationSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceSection {
    pub classification: ConcordanceRate,
    pub localization: ConcordanceRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset_id: String,
    pub tool_version: String,
    pub config: EvalConfig,
    pub cases: u64,
    pub detection: Vec<DetectionRow>,
    pub roc: Vec<RocSeries>,
    pub localization: Vec<LocalizationRow>,
    pub concordance: Option<ConcordanceSection>,
    pub acceptance: Option<AcceptanceSummary>,
    pub sus: Option<SusSummary>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("no assessment for case {0}")]
    MissingAssessment(String),
    #[error("case {0} appears twice")]
    DuplicateCase(String),
    #[error("operating threshold {value} for {condition} is outside [0, 1]")]
    BadThreshold { condition: Condition, value: f64 },
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error(transparent)]
    Study(#[from] crate::study::StudyError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
}
