//! Seeded percentile bootstrap. Each replicate draws from its own ChaCha
//! stream, so results do not depend on how replicates are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binomial::Interval;
use super::roc::{check_inputs, mann_whitney_auc};
use super::MetricsError;
use crate::scalar::Real;

pub const DEFAULT_SEED: u64 = 20240229;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub reps: u64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { reps: 2000, seed: DEFAULT_SEED }
    }
}

pub(crate) fn replicate_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Linear-interpolated `(α/2, 1-α/2)` quantiles; sorts `values` in place.
pub fn percentile_interval<F: Real>(values: &mut [F], level: F) -> Result<(F, F), MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if !(level > F::zero() && level < F::one()) {
        return Err(MetricsError::InvalidLevel(level.to_f64().unwrap_or(f64::NAN)));
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite replicate"));
    let q = |p: F| {
        let h = p * F::from_count(values.len() as u64 - 1);
        let lo = h.floor();
        let i = lo.to_usize().unwrap();
        let frac = h - lo;
        if i + 1 < values.len() {
            values[i] + frac * (values[i + 1] - values[i])
        } else {
            values[i]
        }
    };
    let half_alpha = (F::one() - level) / F::lit(2.0);
    Ok((q(half_alpha), q(F::one() - half_alpha)))
}

/// Percentile interval for AUROC. Positives and negatives are resampled
/// separately so every replicate keeps both classes.
pub fn bootstrap_auroc_ci<F: Real>(
    scores: &[F],
    labels: &[bool],
    level: F,
    cfg: &BootstrapConfig,
) -> Result<Interval<F>, MetricsError> {
    check_inputs(scores, labels)?;
    if cfg.reps == 0 {
        return Err(MetricsError::NoReplicates);
    }
    let estimate = mann_whitney_auc(scores, labels)?;
    let pos: Vec<F> = scores.iter().zip(labels).filter(|(_, &l)| l).map(|(&s, _)| s).collect();
    let neg: Vec<F> = scores.iter().zip(labels).filter(|(_, &l)| !l).map(|(&s, _)| s).collect();
    let mut labels_rep = vec![true; pos.len()];
    labels_rep.resize(pos.len() + neg.len(), false);

    let mut reps: Vec<F> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_rng(cfg.seed, rep);
            let mut sample = Vec::with_capacity(labels_rep.len());
            sample.extend((0..pos.len()).map(|_| pos[rng.random_range(0..pos.len())]));
            sample.extend((0..neg.len()).map(|_| neg[rng.random_range(0..neg.len())]));
            mann_whitney_auc(&sample, &labels_rep).expect("both classes present")
        })
        .collect();
    let (lower, upper) = percentile_interval(&mut reps, level)?;
    Ok(Interval { estimate, lower, upper, level })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_separation_is_degenerate_at_one() {
        let ci = bootstrap_auroc_ci(&[0.9f64, 0.8, 0.2, 0.1], &[true, true, false, false], 0.95, &Default::default())
            .unwrap();
        assert_eq!((ci.estimate, ci.lower, ci.upper), (1.0, 1.0, 1.0));
    }

    fn noisy(n: usize) -> (Vec<f64>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let labels: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let scores = labels.iter().map(|&l| rng.random::<f64>() + if l { 0.3 } else { 0.0 }).collect();
        (scores, labels)
    }

    #[test]
    fn doubling_the_data_narrows_the_interval() {
        let (s, l) = noisy(60);
        let (s2, l2) = ([s.clone(), s.clone()].concat(), [l.clone(), l.clone()].concat());
        let cfg = BootstrapConfig { reps: 1000, seed: 1 };
        let a = bootstrap_auroc_ci(&s, &l, 0.95, &cfg).unwrap();
        let b = bootstrap_auroc_ci(&s2, &l2, 0.95, &cfg).unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert!(b.upper - b.lower < a.upper - a.lower);
    }

    #[test]
    fn single_positive_does_not_crash() {
        let ci = bootstrap_auroc_ci(&[0.5f64, 0.7, 0.2, 0.9], &[true, false, false, false], 0.95, &Default::default())
            .unwrap();
        assert!(ci.lower <= ci.estimate && ci.estimate <= ci.upper);
    }

    #[test]
    fn same_seed_same_interval() {
        let (s, l) = noisy(40);
        let cfg = BootstrapConfig { reps: 300, seed: 77 };
        assert_eq!(bootstrap_auroc_ci(&s, &l, 0.95, &cfg).unwrap(), bootstrap_auroc_ci(&s, &l, 0.95, &cfg).unwrap());
    }

    #[test]
    fn percentile_interpolates() {
        let mut v: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        let (lo, hi) = percentile_interval(&mut v, 0.9).unwrap();
        assert!((lo - 5.0).abs() < 1e-12 && (hi - 95.0).abs() < 1e-12);
    }
}
