use serde::{Deserialize, Serialize};

use super::binomial::{clopper_pearson, BinomialCi};
use super::MetricsError;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Sens/Spec/PPV/NPV; a rate whose denominator is zero is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real + Serialize + serde::de::DeserializeOwned")]
pub struct DiagnosticRates<F> {
    pub sensitivity: Option<BinomialCi<F>>,
    pub specificity: Option<BinomialCi<F>>,
    pub ppv: Option<BinomialCi<F>>,
    pub npv: Option<BinomialCi<F>>,
}

/// Counts with `score >= threshold` predicted positive. `threshold = +inf`
/// predicts nothing positive.
pub fn confusion_counts<F: Real>(scores: &[F], labels: &[bool], threshold: F) -> Result<ConfusionCounts, MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch { scores: scores.len(), labels: labels.len() });
    }
    let valid = threshold == F::infinity() || (threshold >= F::zero() && threshold <= F::one());
    if !valid {
        return Err(MetricsError::InvalidThreshold(threshold.to_f64().unwrap_or(f64::NAN)));
    }
    let mut c = ConfusionCounts::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

fn rate<F: Real>(num: u64, den: u64, level: F) -> Result<Option<BinomialCi<F>>, MetricsError> {
    if den == 0 {
        return Ok(None);
    }
    clopper_pearson(num, den, level).map(Some)
}

pub fn rates_from_counts<F: Real>(c: &ConfusionCounts, level: F) -> Result<DiagnosticRates<F>, MetricsError> {
    Ok(DiagnosticRates {
        sensitivity: rate(c.tp, c.tp + c.fn_, level)?,
        specificity: rate(c.tn, c.tn + c.fp, level)?,
        ppv: rate(c.tp, c.tp + c.fp, level)?,
        npv: rate(c.tn, c.tn + c.fn_, level)?,
    })
}

pub fn confusion_and_rates<F: Real>(
    scores: &[F],
    labels: &[bool],
    threshold: F,
    level: F,
) -> Result<(ConfusionCounts, DiagnosticRates<F>), MetricsError> {
    let c = confusion_counts(scores, labels, threshold)?;
    let r = rates_from_counts(&c, level)?;
    Ok((c, r))
}
