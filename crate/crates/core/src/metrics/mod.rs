//! Detection and localization metrics.
//!
//! The statistical kernels are generic over [`Real`](crate::scalar::Real);
//! localization works on pixel sets and reports `f64`.

pub mod binomial;
pub mod bootstrap;
pub mod localization;
pub mod rates;
pub mod roc;
pub mod special;

pub use binomial::{clopper_pearson, BinomialCi, Interval};
pub use bootstrap::{bootstrap_auroc_ci, percentile_interval, BootstrapConfig};
pub use localization::{
    llf_nlf, match_lesions, mean_overlap, rasterize_lesions, BlobMatch, LesionMatch, LocalizationCaseResult,
    LocalizationConfig, LocalizationFilter, LocalizationSummary, RasterizedLesion,
};
pub use rates::{confusion_and_rates, confusion_counts, rates_from_counts, ConfusionCounts, DiagnosticRates};
pub use roc::{
    auroc, mann_whitney_auc, mann_whitney_counts, optimal_operating_point, roc_curve, OperatingPoint, RocCurve,
    RocPoint,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("need both classes, got {positives} positive and {negatives} negative")]
    DegenerateLabels { positives: u64, negatives: u64 },
    #[error("invalid binomial counts {successes}/{trials}")]
    InvalidCounts { successes: u64, trials: u64 },
    #[error("confidence level {0} is outside (0, 1)")]
    InvalidLevel(f64),
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("score at index {0} is not finite")]
    InvalidScore(usize),
    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("lesion {index} of case {case_id} covers no pixels")]
    EmptyGeometry { case_id: String, index: usize },
    #[error("lesion {index} of case {case_id}: {source}")]
    Geometry { case_id: String, index: usize, source: crate::geometry::GeometryError },
    #[error("case {case_id}: no transform recorded for view {view}")]
    MissingTransform { case_id: String, view: crate::types::ViewLabel },
    #[error("no input to summarise")]
    EmptyInput,
    #[error("bootstrap needs at least one replicate")]
    NoReplicates,
}
