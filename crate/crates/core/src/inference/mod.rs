//! Model-output contract, the rule-based baseline detector, score aggregation
//! and heatmap handling.

pub mod aggregate;
pub mod baseline;
pub mod bundle;
pub mod heatmap;
pub mod render;

use std::collections::BTreeMap;

pub use aggregate::{
    aggregate_case, AggregateConfig, BreastScores, CaseAssessment, CategoryScores, CategoryThresholds,
};
pub use baseline::{baseline_case, baseline_detect, BaselineConfig};
pub use bundle::{load_bundle, write_bundle};
pub use heatmap::{binarize_heatmap, upscale_to_canonical, HeatmapBlob};
pub use render::{render_overlay, BlobKind, OverlayStyle};

use crate::types::{ModelNode, ViewLabel, CANONICAL_HEIGHT, CANONICAL_WIDTH};

/// Width of the decoder's native output grid.
pub const NATIVE_WIDTH: u32 = 128;
/// Height of the decoder's native output grid.
pub const NATIVE_HEIGHT: u32 = 192;

#[derive(Debug, thiserror::Error)]
pub enum InferenceError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error(transparent)]
    Image(#[from] crate::imageio::ImageIoError),
    #[error("case {case_id}: view {view} has no score for node {node}")]
    MissingNode { case_id: String, view: ViewLabel, node: ModelNode },
    #[error("case {case_id}: value {value} for {what} is outside [0, 1]")]
    ValueOutOfRange { case_id: String, what: String, value: f64 },
    #[error("case {case_id}: unknown view `{view}`")]
    UnknownView { case_id: String, view: String },
    #[error("case {case_id}: unknown node `{node}`")]
    UnknownNode { case_id: String, node: String },
    #[error("case {case_id}: map {view}/{node} is {width}x{height}, expected a 2:3 grid")]
    BadMapShape { case_id: String, view: ViewLabel, node: ModelNode, width: u32, height: u32 },
    #[error("case {case_id}: duplicate map {view}/{node}")]
    DuplicateMap { case_id: String, view: ViewLabel, node: ModelNode },
    #[error("case {case_id}: bundle lacks views {missing:?}")]
    IncompleteBundle { case_id: String, missing: Vec<ViewLabel> },
}

/// Per-pixel probabilities for one node on one view.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    pub node: ModelNode,
    pub view: ViewLabel,
    pub width: u32,
    pub height: u32,
    pub values: Vec<f32>,
}

impl ProbabilityMap {
    /// Maps must cover the canonical frame at some 2:3 resolution and hold values in `[0, 1]`.
    pub fn validate(&self, case_id: &str) -> Result<(), InferenceError> {
        let shape_ok = self.width > 0
            && self.height > 0
            && self.width as u64 * 3 == self.height as u64 * 2
            && self.values.len() == self.width as usize * self.height as usize;
        if !shape_ok {
            return Err(InferenceError::BadMapShape {
                case_id: case_id.to_string(),
                view: self.view,
                node: self.node,
                width: self.width,
                height: self.height,
            });
        }
        if let Some(&v) = self.values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(InferenceError::ValueOutOfRange {
                case_id: case_id.to_string(),
                what: format!("map {}/{}", self.view, self.node),
                value: v as f64,
            });
        }
        Ok(())
    }

    pub fn is_canonical(&self) -> bool {
        self.width == CANONICAL_WIDTH && self.height == CANONICAL_HEIGHT
    }

    pub fn max_value(&self) -> f32 {
        self.values.iter().copied().fold(0.0, f32::max)
    }
}

/// Per-case model output: node scores per view plus optional probability maps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionBundle {
    pub case_id: String,
    pub node_scores: BTreeMap<ViewLabel, BTreeMap<ModelNode, f64>>,
    pub maps: Vec<ProbabilityMap>,
}

impl PredictionBundle {
    pub fn validate(&self) -> Result<(), InferenceError> {
        let case_id = &self.case_id;
        for (&view, scores) in &self.node_scores {
            for node in ModelNode::ALL {
                let v = *scores.get(&node).ok_or_else(|| InferenceError::MissingNode {
                    case_id: case_id.clone(),
                    view,
                    node,
                })?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(InferenceError::ValueOutOfRange {
                        case_id: case_id.clone(),
                        what: format!("score {view}/{node}"),
                        value: v,
                    });
                }
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for m in &self.maps {
            m.validate(case_id)?;
            if !seen.insert((m.view, m.node)) {
                return Err(InferenceError::DuplicateMap { case_id: case_id.clone(), view: m.view, node: m.node });
            }
        }
        Ok(())
    }

    pub fn score(&self, view: ViewLabel, node: ModelNode) -> Option<f64> {
        self.node_scores.get(&view).and_then(|s| s.get(&node)).copied()
    }

    /// Merges the views of `other` into `self`; later entries win.
    pub fn merge(&mut self, other: PredictionBundle) {
        self.node_scores.extend(other.node_scores);
        for m in other.maps {
            self.maps.retain(|x| !(x.view == m.view && x.node == m.node));
            self.maps.push(m);
        }
    }
}
