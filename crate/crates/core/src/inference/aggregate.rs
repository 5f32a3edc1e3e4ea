//! Collapses nine per-view node scores into per-breast category scores.
//!
//! For each breast and category the score is the maximum over that breast's
//! views of the suspicious nodes mapping to the category. Benign nodes feed a
//! separate display score capped at 15%.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::heatmap::{binarize_heatmap, HeatmapBlob};
use super::{InferenceError, PredictionBundle};
use crate::types::{node_to_category, FinalCategory, Laterality, ModelNode, NodeKind, ViewLabel};

pub const BENIGN_DISPLAY_CAP: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CategoryScores {
    pub calcification: f64,
    pub mass: f64,
    pub other: f64,
}

impl CategoryScores {
    pub fn get(&self, c: FinalCategory) -> f64 {
        match c {
            FinalCategory::Calcification => self.calcification,
            FinalCategory::Mass => self.mass,
            FinalCategory::Other => self.other,
        }
    }

    pub fn get_mut(&mut self, c: FinalCategory) -> &mut f64 {
        match c {
            FinalCategory::Calcification => &mut self.calcification,
            FinalCategory::Mass => &mut self.mass,
            FinalCategory::Other => &mut self.other,
        }
    }

    pub fn max(&self) -> f64 {
        self.calcification.max(self.mass).max(self.other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BreastScores {
    pub left: CategoryScores,
    pub right: CategoryScores,
}

impl BreastScores {
    pub fn get(&self, side: Laterality, c: FinalCategory) -> f64 {
        self.side(side).get(c)
    }

    pub fn side(&self, side: Laterality) -> &CategoryScores {
        match side {
            Laterality::Left => &self.left,
            Laterality::Right => &self.right,
        }
    }

    fn side_mut(&mut self, side: Laterality) -> &mut CategoryScores {
        match side {
            Laterality::Left => &mut self.left,
            Laterality::Right => &mut self.right,
        }
    }

    /// Category score for the case: the larger of the two breasts.
    pub fn case_score(&self, c: FinalCategory) -> f64 {
        self.left.get(c).max(self.right.get(c))
    }

    pub fn max(&self) -> f64 {
        self.left.max().max(self.right.max())
    }
}

/// Per-category binarisation thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryThresholds {
    pub calcification: f64,
    pub mass: f64,
    pub other: f64,
}

impl CategoryThresholds {
    pub fn uniform(t: f64) -> Self {
        Self { calcification: t, mass: t, other: t }
    }

    pub fn get(&self, c: FinalCategory) -> f64 {
        match c {
            FinalCategory::Calcification => self.calcification,
            FinalCategory::Mass => self.mass,
            FinalCategory::Other => self.other,
        }
    }
}

impl Default for CategoryThresholds {
    fn default() -> Self {
        Self::uniform(0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AggregateConfig {
    pub heatmap_thresholds: CategoryThresholds,
    pub benign_cap: f64,
}

impl Default for AggregateConfig {
    fn default() -> Self {
        Self { heatmap_thresholds: CategoryThresholds::default(), benign_cap: BENIGN_DISPLAY_CAP }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseAssessment {
    pub case_id: String,
    pub breast_scores: BreastScores,
    pub benign_display_scores: BreastScores,
    pub blobs: Vec<HeatmapBlob>,
    pub cancer_score: f64,
}

impl CaseAssessment {
    /// Categories whose case-level score reaches the given operating thresholds.
    pub fn positive_categories(&self, thresholds: &CategoryThresholds) -> BTreeSet<FinalCategory> {
        FinalCategory::ALL.into_iter().filter(|&c| self.breast_scores.case_score(c) >= thresholds.get(c)).collect()
    }

    pub fn suspicious_blobs(&self) -> impl Iterator<Item = &HeatmapBlob> {
        self.blobs.iter().filter(|b| b.suspicious)
    }
}

pub fn aggregate_case(bundle: &PredictionBundle, cfg: &AggregateConfig) -> Result<CaseAssessment, InferenceError> {
    let missing: Vec<ViewLabel> = ViewLabel::ALL.into_iter().filter(|v| !bundle.node_scores.contains_key(v)).collect();
    if !missing.is_empty() {
        return Err(InferenceError::IncompleteBundle { case_id: bundle.case_id.clone(), missing });
    }
    bundle.validate()?;

    let mut breast = BreastScores::default();
    let mut benign = BreastScores::default();
    for (&view, scores) in &bundle.node_scores {
        let side = view.laterality();
        for (&node, &score) in scores {
            match node.kind() {
                NodeKind::Suspicious => {
                    let (cat, _) = node_to_category(node).expect("suspicious nodes have a category");
                    let slot = breast.side_mut(side).get_mut(cat);
                    *slot = slot.max(score);
                }
                NodeKind::Benign => {
                    let (cat, _) = node.display_category().expect("benign nodes have a display category");
                    let slot = benign.side_mut(side).get_mut(cat);
                    *slot = slot.max(score.min(cfg.benign_cap));
                }
                NodeKind::Normal => {}
            }
        }
    }

    let mut blobs = Vec::new();
    let mut maps: Vec<_> = bundle.maps.iter().filter(|m| m.node != ModelNode::Normal).collect();
    maps.sort_by_key(|m| (m.view, m.node));
    for map in maps {
        let (cat, _) = map.node.display_category().expect("non-normal node");
        blobs.extend(binarize_heatmap(map, cfg.heatmap_thresholds.get(cat)));
    }

    Ok(CaseAssessment {
        case_id: bundle.case_id.clone(),
        cancer_score: breast.max(),
        breast_scores: breast,
        benign_display_scores: benign,
        blobs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn bundle(f: impl Fn(ViewLabel, ModelNode) -> f64) -> PredictionBundle {
        let node_scores = ViewLabel::ALL
            .into_iter()
            .map(|v| (v, ModelNode::ALL.into_iter().map(|n| (n, f(v, n))).collect::<BTreeMap<_, _>>()))
            .collect();
        PredictionBundle { case_id: "c".into(), node_scores, maps: vec![] }
    }

    #[test]
    fn breast_score_takes_view_maximum() {
        let b = bundle(|v, n| match (v, n) {
            (ViewLabel::LCC, ModelNode::SuspMass) => 0.3,
            (ViewLabel::LMLO, ModelNode::SuspMass) => 0.7,
            _ => 0.0,
        });
        let a = aggregate_case(&b, &AggregateConfig::default()).unwrap();
        assert_eq!(a.breast_scores.get(Laterality::Left, FinalCategory::Mass), 0.7);
        assert_eq!(a.breast_scores.get(Laterality::Right, FinalCategory::Mass), 0.0);
        assert_eq!(a.cancer_score, 0.7);
    }

    #[test]
    fn benign_is_capped_and_kept_out_of_suspicion() {
        let b = bundle(|_, n| if n == ModelNode::BenignMass { 0.9 } else { 0.0 });
        let a = aggregate_case(&b, &AggregateConfig::default()).unwrap();
        assert_eq!(a.benign_display_scores.get(Laterality::Left, FinalCategory::Mass), 0.15);
        assert_eq!(a.breast_scores.get(Laterality::Left, FinalCategory::Mass), 0.0);
        assert_eq!(a.cancer_score, 0.0);
    }

    #[test]
    fn all_zero_scores() {
        let a = aggregate_case(&bundle(|_, _| 0.0), &AggregateConfig::default()).unwrap();
        assert_eq!(a.breast_scores, BreastScores::default());
        assert_eq!(a.cancer_score, 0.0);
        assert!(a.blobs.is_empty());
    }

    #[test]
    fn other_collects_both_nodes() {
        let b = bundle(|v, n| match (v, n) {
            (ViewLabel::RCC, ModelNode::SuspAxAdeno) => 0.2,
            (ViewLabel::RMLO, ModelNode::SuspArchDist) => 0.6,
            _ => 0.0,
        });
        let a = aggregate_case(&b, &AggregateConfig::default()).unwrap();
        assert_eq!(a.breast_scores.get(Laterality::Right, FinalCategory::Other), 0.6);
    }

    #[test]
    fn missing_view_is_incomplete() {
        let mut b = bundle(|_, _| 0.1);
        b.node_scores.remove(&ViewLabel::RMLO);
        assert!(matches!(
            aggregate_case(&b, &AggregateConfig::default()),
            Err(InferenceError::IncompleteBundle { .. })
        ));
    }
}
