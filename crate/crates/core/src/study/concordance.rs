use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::StudyError;
use crate::inference::HeatmapBlob;
use crate::metrics::{
    clopper_pearson, match_lesions, BinomialCi, LocalizationConfig, LocalizationFilter, RasterizedLesion,
};
use crate::types::{FinalCategory, UnknownLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConcordanceCategory {
    Agree,
    Edit,
    Add,
    Reject,
}

impl ConcordanceCategory {
    pub const ALL: [ConcordanceCategory; 4] = [Self::Agree, Self::Edit, Self::Add, Self::Reject];

    pub fn is_concordant(self) -> bool {
        self != Self::Reject
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Agree => "Agree",
            Self::Edit => "Edit",
            Self::Add => "Add",
            Self::Reject => "Reject",
        }
    }
}

impl fmt::Display for ConcordanceCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConcordanceCategory {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|c| c.as_str().eq_ignore_ascii_case(s)).ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

/// Compares the suspicious categories of the radiology report with those the model flagged.
pub fn classify_concordance(report: &BTreeSet<FinalCategory>, ai: &BTreeSet<FinalCategory>) -> ConcordanceCategory {
    use ConcordanceCategory::*;
    match (report.is_empty(), ai.is_empty()) {
        (true, true) => Agree,
        (true, false) | (false, true) => Reject,
        _ if report == ai => Agree,
        _ if ai.is_subset(report) => Add,
        _ if !report.is_disjoint(ai) => Edit,
        _ => Reject,
    }
}

/// Localization outcome from lesion/blob counts.
///
/// `hits` counts lesions whose coverage strictly exceeds the threshold.
pub fn localization_category(lesions: usize, hits: usize, blobs: usize, fp_present: bool) -> ConcordanceCategory {
    use ConcordanceCategory::*;
    if lesions == 0 {
        return if blobs == 0 { Agree } else { Reject };
    }
    match hits {
        0 => Reject,
        h if h < lesions => Add,
        _ if fp_present => Edit,
        _ => Agree,
    }
}

/// Category-agnostic localization concordance for one case.
pub fn localize_concordance(
    case_id: &str,
    lesions: &[RasterizedLesion],
    blobs: &[HeatmapBlob],
    cfg: &LocalizationConfig,
) -> Result<ConcordanceCategory, StudyError> {
    let m = match_lesions(case_id, lesions, blobs, 4, LocalizationFilter::all(), cfg)?;
    let hits = m.lesions.iter().filter(|l| l.iogt > cfg.tau_hit).count();
    let fp = m.blobs.iter().any(|b| b.is_fp);
    Ok(localization_category(m.lesions.len(), hits, m.blobs.len(), fp))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub agree: u64,
    pub edit: u64,
    pub add: u64,
    pub reject: u64,
}

impl CategoryCounts {
    pub fn get(&self, c: ConcordanceCategory) -> u64 {
        match c {
            ConcordanceCategory::Agree => self.agree,
            ConcordanceCategory::Edit => self.edit,
            ConcordanceCategory::Add => self.add,
            ConcordanceCategory::Reject => self.reject,
        }
    }

    pub fn record(&mut self, c: ConcordanceCategory) {
        *match c {
            ConcordanceCategory::Agree => &mut self.agree,
            ConcordanceCategory::Edit => &mut self.edit,
            ConcordanceCategory::Add => &mut self.add,
            ConcordanceCategory::Reject => &mut self.reject,
        } += 1;
    }

    pub fn concordant(&self) -> u64 {
        self.agree + self.edit + self.add
    }

    pub fn total(&self) -> u64 {
        self.concordant() + self.reject
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceRate {
    pub counts: CategoryCounts,
    pub rate: BinomialCi<f64>,
}

pub fn concordance_rate(categories: &[ConcordanceCategory], level: f64) -> Result<ConcordanceRate, StudyError> {
    let mut counts = CategoryCounts::default();
    categories.iter().for_each(|&c| counts.record(c));
    rate_from_counts(counts, level)
}

pub fn rate_from_counts(counts: CategoryCounts, level: f64) -> Result<ConcordanceRate, StudyError> {
    if counts.total() == 0 {
        return Err(StudyError::EmptyInput);
    }
    let rate = clopper_pearson(counts.concordant(), counts.total(), level)?;
    Ok(ConcordanceRate { counts, rate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ConcordanceCategory::*;
    use FinalCategory::*;

    fn set(cs: &[FinalCategory]) -> BTreeSet<FinalCategory> {
        cs.iter().copied().collect()
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_concordance(&set(&[Mass]), &set(&[Mass])), Agree);
        assert_eq!(classify_concordance(&set(&[Mass, Calcification]), &set(&[Mass])), Add);
        assert_eq!(classify_concordance(&set(&[Mass]), &set(&[Calcification])), Reject);
        assert_eq!(classify_concordance(&set(&[]), &set(&[])), Agree);
        assert_eq!(classify_concordance(&set(&[Mass, Other]), &set(&[Mass, Calcification])), Edit);
        assert_eq!(classify_concordance(&set(&[Mass]), &set(&[Mass, Other])), Edit);
    }

    #[test]
    fn localization_precedence() {
        assert_eq!(localization_category(0, 0, 0, false), Agree);
        assert_eq!(localization_category(0, 0, 2, true), Reject);
        assert_eq!(localization_category(2, 2, 2, false), Agree);
        assert_eq!(localization_category(2, 2, 3, true), Edit);
        assert_eq!(localization_category(2, 1, 1, false), Add);
        assert_eq!(localization_category(2, 0, 1, true), Reject);
    }

    #[test]
    fn reference_rates() {
        let r = rate_from_counts(CategoryCounts { agree: 523, edit: 193, add: 21, reject: 146 }, 0.95).unwrap();
        assert_eq!((r.rate.successes, r.rate.trials), (737, 883));
        assert!((r.rate.lower - 0.808).abs() < 5e-4 && (r.rate.upper - 0.859).abs() < 5e-4);
        let r = rate_from_counts(CategoryCounts { agree: 376, edit: 178, add: 52, reject: 155 }, 0.95).unwrap();
        assert_eq!((r.rate.successes, r.rate.trials), (606, 761));
        assert!((r.rate.lower - 0.766).abs() < 5e-4 && (r.rate.upper - 0.824).abs() < 5e-4);
    }

    #[test]
    fn all_agree_reaches_one() {
        let r = concordance_rate(&[Agree; 5], 0.95).unwrap();
        assert_eq!((r.rate.estimate, r.rate.upper), (1.0, 1.0));
        assert!(matches!(concordance_rate(&[], 0.95), Err(StudyError::EmptyInput)));
    }
}
