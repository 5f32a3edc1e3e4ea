//! Heatmap overlays on top of a preprocessed view.

use std::str::FromStr;

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use super::heatmap::HeatmapBlob;
use crate::preprocess::PreprocessedView;
use crate::types::{PixelSet, UnknownLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlayStyle {
    /// Outlines only: solid for suspicious, dotted for benign.
    Greyscale,
    /// Translucent fills: warm for suspicious, blue for benign.
    Color,
}

impl FromStr for OverlayStyle {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "greyscale" | "grayscale" | "grey" | "gray" | "mono" => Ok(Self::Greyscale),
            "color" | "colour" => Ok(Self::Color),
            _ => Err(UnknownLabel(s.to_string())),
        }
    }
}

/// Which blobs to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlobKind {
    #[default]
    All,
    Suspicious,
    Benign,
}

impl BlobKind {
    pub fn admits(self, blob: &HeatmapBlob) -> bool {
        match self {
            BlobKind::All => true,
            BlobKind::Suspicious => blob.suspicious,
            BlobKind::Benign => !blob.suspicious,
        }
    }
}

impl FromStr for BlobKind {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(Self::All),
            "suspicious" => Ok(Self::Suspicious),
            "benign" => Ok(Self::Benign),
            _ => Err(UnknownLabel(s.to_string())),
        }
    }
}

const FILL_ALPHA: f32 = 0.45;
const BENIGN_BLUE: [u8; 3] = [30, 100, 255];
const OUTLINE: [u8; 3] = [255, 255, 255];

/// Yellow at the binarisation threshold shading to red at certainty.
fn warm(peak: f64) -> [u8; 3] {
    let t = peak.clamp(0.0, 1.0) as f32;
    [255, (220.0 * (1.0 - t)).round() as u8, 0]
}

fn blend(px: &mut Rgb<u8>, c: [u8; 3]) {
    for (p, c) in px.0.iter_mut().zip(c) {
        *p = (*p as f32 * (1.0 - FILL_ALPHA) + c as f32 * FILL_ALPHA).round() as u8;
    }
}

/// Blob pixels with at least one 4-neighbour outside the blob or the image.
pub fn boundary(set: &PixelSet, width: u32, height: u32) -> Vec<(u32, u32)> {
    set.points()
        .filter(|&(x, y)| {
            x == 0
                || y == 0
                || x + 1 >= width
                || y + 1 >= height
                || !set.contains(y * width + x - 1)
                || !set.contains(y * width + x + 1)
                || !set.contains((y - 1) * width + x)
                || !set.contains((y + 1) * width + x)
        })
        .collect()
}

fn dotted(x: u32, y: u32) -> bool {
    ((x + y) / 2).is_multiple_of(2)
}

/// RGB rendering of `pv.image` with `blobs` drawn on top. Benign blobs are
/// drawn first so suspicious ones stay visible where they overlap.
pub fn render_overlay(pv: &PreprocessedView, blobs: &[HeatmapBlob], style: OverlayStyle) -> RgbImage {
    let (w, h) = (pv.image.width(), pv.image.height());
    let mut out = RgbImage::from_fn(w, h, |x, y| {
        let v = pv.image.get(x, y) as u8;
        Rgb([v, v, v])
    });
    let ordered = blobs.iter().filter(|b| !b.suspicious).chain(blobs.iter().filter(|b| b.suspicious));
    for blob in ordered.filter(|b| b.pixels.width == w) {
        match style {
            OverlayStyle::Greyscale => {
                for (x, y) in boundary(&blob.pixels, w, h) {
                    if blob.suspicious || dotted(x, y) {
                        *out.get_pixel_mut(x, y) = Rgb(OUTLINE);
                    }
                }
            }
            OverlayStyle::Color => {
                let c = if blob.suspicious { warm(blob.peak_score) } else { BENIGN_BLUE };
                for (x, y) in blob.pixels.points() {
                    blend(out.get_pixel_mut(x, y), c);
                }
            }
        }
    }
    out
}
