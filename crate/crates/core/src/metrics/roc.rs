//! ROC sweep, trapezoidal AUROC, the rank-sum route and Youden operating points.

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real + Serialize + serde::de::DeserializeOwned")]
pub struct RocPoint<F> {
    pub fpr: F,
    pub tpr: F,
    /// Predict positive iff `score >= threshold`; `+inf` for the origin.
    pub threshold: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real + Serialize + serde::de::DeserializeOwned")]
pub struct RocCurve<F> {
    pub points: Vec<RocPoint<F>>,
    pub positives: u64,
    pub negatives: u64,
}

pub(crate) fn check_inputs<F: Real>(scores: &[F], labels: &[bool]) -> Result<(u64, u64), MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch { scores: scores.len(), labels: labels.len() });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricsError::InvalidScore(i));
    }
    let pos = labels.iter().filter(|&&l| l).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricsError::DegenerateLabels { positives: pos, negatives: neg });
    }
    Ok((pos, neg))
}

/// Threshold sweep over distinct scores in descending order; tied scores move together.
pub fn roc_curve<F: Real>(scores: &[F], labels: &[bool]) -> Result<RocCurve<F>, MetricsError> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));
    let (p, n) = (F::from_count(pos), F::from_count(neg));
    let mut points = vec![RocPoint { fpr: F::zero(), tpr: F::zero(), threshold: F::infinity() }];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint { fpr: F::from_count(fp) / n, tpr: F::from_count(tp) / p, threshold: s });
    }
    Ok(RocCurve { points, positives: pos, negatives: neg })
}

/// Trapezoidal area under the curve.
pub fn auroc<F: Real>(curve: &RocCurve<F>) -> F {
    let half = F::lit(0.5);
    curve.points.windows(2).fold(F::zero(), |acc, w| acc + (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) * half)
}

/// Twice the Mann-Whitney U statistic (ties count one half) and the number of
/// positive/negative pairs, as exact integers. `auc = doubled_u / (2 * pairs)`.
pub fn mann_whitney_counts<F: Real>(scores: &[F], labels: &[bool]) -> Result<(u128, u128), MetricsError> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));
    // walk ascending; for each tie group count negatives strictly below
    let (mut neg_below, mut doubled) = (0u128, 0u128);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (mut gp, mut gn) = (0u128, 0u128);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                gp += 1;
            } else {
                gn += 1;
            }
            i += 1;
        }
        doubled += gp * (2 * neg_below + gn);
        neg_below += gn;
    }
    Ok((doubled, pos as u128 * neg as u128))
}

/// AUROC through the rank-sum statistic.
pub fn mann_whitney_auc<F: Real>(scores: &[F], labels: &[bool]) -> Result<F, MetricsError> {
    let (doubled, pairs) = mann_whitney_counts(scores, labels)?;
    Ok(F::from_u128(doubled).unwrap() / (F::lit(2.0) * F::from_u128(pairs).unwrap()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real + Serialize + serde::de::DeserializeOwned")]
pub struct OperatingPoint<F> {
    pub threshold: F,
    pub tpr: F,
    pub fpr: F,
    pub youden_j: F,
}

/// Curve point maximising `tpr - fpr`; ties go to the lower fpr, then the lower threshold.
pub fn optimal_operating_point<F: Real>(curve: &RocCurve<F>) -> OperatingPoint<F> {
    let mut best: Option<OperatingPoint<F>> = None;
    for p in &curve.points {
        let cand = OperatingPoint { threshold: p.threshold, tpr: p.tpr, fpr: p.fpr, youden_j: p.tpr - p.fpr };
        best = Some(match best {
            None => cand,
            Some(b) => {
                let better = cand.youden_j > b.youden_j
                    || (cand.youden_j == b.youden_j
                        && (cand.fpr < b.fpr || (cand.fpr == b.fpr && cand.threshold < b.threshold)));
                if better {
                    cand
                } else {
                    b
                }
            }
        });
    }
    best.expect("curve always contains the origin")
}
