//! System Usability Scale scoring.

use serde::{Deserialize, Serialize};

use super::StudyError;
use crate::metrics::special::student_t_critical;
use crate::metrics::Interval;

pub const SUS_ITEMS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SusResponse {
    pub participant_id: String,
    pub items: Vec<u8>,
}

impl SusResponse {
    pub fn validate(&self) -> Result<(), StudyError> {
        if self.items.len() != SUS_ITEMS {
            return Err(StudyError::BadItemCount {
                participant_id: self.participant_id.clone(),
                got: self.items.len(),
            });
        }
        if let Some((i, &v)) = self.items.iter().enumerate().find(|(_, v)| !(1..=5).contains(*v)) {
            return Err(StudyError::BadItemValue {
                participant_id: self.participant_id.clone(),
                item: i + 1,
                value: v,
            });
        }
        Ok(())
    }

    /// `2.5 * (sum over odd items of (v - 1) + sum over even items of (5 - v))`.
    pub fn score(&self) -> Result<f64, StudyError> {
        self.validate()?;
        let raw: u32 =
            self.items.iter().enumerate().map(|(i, &v)| if i % 2 == 0 { v as u32 - 1 } else { 5 - v as u32 }).sum();
        Ok(raw as f64 * 2.5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SusSummary {
    pub scores: Vec<(String, f64)>,
    pub mean: f64,
    /// Student-t interval over participants; absent with fewer than two.
    pub ci: Option<Interval<f64>>,
}

pub fn sus_score(responses: &[SusResponse], level: f64) -> Result<SusSummary, StudyError> {
    if responses.is_empty() {
        return Err(StudyError::EmptyInput);
    }
    let scores =
        responses.iter().map(|r| Ok((r.participant_id.clone(), r.score()?))).collect::<Result<Vec<_>, StudyError>>()?;
    let n = scores.len() as f64;
    let mean = scores.iter().map(|s| s.1).sum::<f64>() / n;
    let ci = (scores.len() >= 2).then(|| {
        let var = scores.iter().map(|s| (s.1 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let half = student_t_critical(1.0 - level, n - 1.0) * (var / n).sqrt();
        Interval { estimate: mean, lower: mean - half, upper: mean + half, level }
    });
    Ok(SusSummary { scores, mean, ci })
}
