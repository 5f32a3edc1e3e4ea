use serde::{Deserialize, Serialize};

use super::ProbabilityMap;
use crate::preprocess::components::{components, Connectivity};
use crate::preprocess::resize::resize_bilinear_f32;
use crate::types::{BinaryMask, FinalCategory, ModelNode, PixelSet, ViewLabel, CANONICAL_HEIGHT, CANONICAL_WIDTH};

/// One 8-connected region of a binarised probability map, in the canonical frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapBlob {
    pub view: ViewLabel,
    pub node: ModelNode,
    pub category: FinalCategory,
    pub suspicious: bool,
    pub pixels: PixelSet,
    pub peak_score: f64,
}

/// Bilinear upscale of a native-resolution map to 1024x1536; canonical maps are copied.
pub fn upscale_to_canonical(map: &ProbabilityMap) -> Vec<f32> {
    if map.is_canonical() {
        return map.values.clone();
    }
    resize_bilinear_f32(&map.values, map.width, map.height, CANONICAL_WIDTH, CANONICAL_HEIGHT)
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect()
}

/// 8-connected components of `{p : map(p) >= threshold}` after upscaling.
/// `Normal` maps never produce blobs.
pub fn binarize_heatmap(map: &ProbabilityMap, threshold: f64) -> Vec<HeatmapBlob> {
    let Some((category, suspicious)) = map.node.display_category() else {
        return Vec::new();
    };
    // Bilinear upscaling never exceeds the input maximum.
    if (map.max_value() as f64) < threshold {
        return Vec::new();
    }
    let values = upscale_to_canonical(map);
    let mask =
        BinaryMask::new(CANONICAL_WIDTH, CANONICAL_HEIGHT, values.iter().map(|&v| v as f64 >= threshold).collect());
    components(&mask, Connectivity::Eight)
        .into_iter()
        .map(|pixels| {
            let peak = pixels.indices().iter().map(|&i| values[i as usize]).fold(0.0f32, f32::max);
            HeatmapBlob { view: map.view, node: map.node, category, suspicious, pixels, peak_score: peak as f64 }
        })
        .collect()
}
