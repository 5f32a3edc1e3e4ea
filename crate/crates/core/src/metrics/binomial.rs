use serde::{Deserialize, Serialize};

use super::special::inverse_regularized_incomplete_beta;
use super::MetricsError;
use crate::scalar::Real;

/// Proportion `successes / trials` with an exact binomial interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real + Serialize + serde::de::DeserializeOwned")]
pub struct BinomialCi<F> {
    pub estimate: F,
    pub lower: F,
    pub upper: F,
    pub level: F,
    pub successes: u64,
    pub trials: u64,
}

/// Point estimate with a non-binomial interval (bootstrap, Student-t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real + Serialize + serde::de::DeserializeOwned")]
pub struct Interval<F> {
    pub estimate: F,
    pub lower: F,
    pub upper: F,
    pub level: F,
}

impl<F: Real> BinomialCi<F> {
    pub fn contains(&self, p: F) -> bool {
        self.lower <= p && p <= self.upper
    }

    pub fn as_interval(&self) -> Interval<F> {
        Interval { estimate: self.estimate, lower: self.lower, upper: self.upper, level: self.level }
    }
}

/// Clopper-Pearson interval from Beta quantiles.
///
/// `lower = B^-1(α/2; x, n-x+1)` (0 when `x = 0`) and
/// `upper = B^-1(1-α/2; x+1, n-x)` (1 when `x = n`), with `α = 1 - level`.
pub fn clopper_pearson<F: Real>(successes: u64, trials: u64, level: F) -> Result<BinomialCi<F>, MetricsError> {
    if trials == 0 || successes > trials {
        return Err(MetricsError::InvalidCounts { successes, trials });
    }
    if !(level > F::zero() && level < F::one()) {
        return Err(MetricsError::InvalidLevel(level.to_f64().unwrap_or(f64::NAN)));
    }
    let alpha = F::one() - level;
    let half = F::lit(0.5);
    let (x, n) = (F::from_count(successes), F::from_count(trials));
    let lower =
        if successes == 0 { F::zero() } else { inverse_regularized_incomplete_beta(alpha * half, x, n - x + F::one()) };
    let upper = if successes == trials {
        F::one()
    } else {
        inverse_regularized_incomplete_beta(F::one() - alpha * half, x + F::one(), n - x)
    };
    let estimate = x / n;
    Ok(BinomialCi { estimate, lower: lower.min(estimate), upper: upper.max(estimate), level, successes, trials })
}
