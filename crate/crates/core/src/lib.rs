//! Core of the mammography CAD evaluation workbench.

pub mod fsutil;
pub mod geometry;
pub mod imageio;
pub mod inference;
pub mod manifest;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod report;
pub mod scalar;
pub mod store;
pub mod study;
pub mod synth;
pub mod types;

pub use scalar::Real;

/// Binomial proportion with interval, in `f64`.
pub type BinomialCi = metrics::BinomialCi<f64>;
pub type Interval = metrics::Interval<f64>;
pub type RocCurve = metrics::RocCurve<f64>;
pub type RocPoint = metrics::RocPoint<f64>;
pub type OperatingPoint = metrics::OperatingPoint<f64>;
pub type DiagnosticRates = metrics::DiagnosticRates<f64>;
