//! Breast-region extraction: 8-bit conversion, background threshold, largest
//! component, hole closing, crop, 2:3 padding and resize to the canonical frame.

pub mod components;
pub mod morphology;
pub mod resize;

use serde::{Deserialize, Serialize};

pub use components::{components, count_components, keep_largest, label_components, Connectivity};
pub use morphology::close_mask;

use crate::types::{BinaryMask, BitDepth, RasterImage, TransformRecord, ViewLabel, CANONICAL_HEIGHT, CANONICAL_WIDTH};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PreprocessError {
    #[error("sample {value} at index {index} exceeds max_input {max_input}")]
    RangeExceeded { index: usize, value: u16, max_input: u16 },
    #[error("no foreground pixels remain after thresholding")]
    NoForeground,
    #[error("expected a {expected}-bit image, got {got}-bit")]
    WrongDepth { expected: u32, got: u32 },
    #[error("max_input must be positive")]
    ZeroMaxInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub cutoff: u16,
    pub connectivity: Connectivity,
    pub closing_radius: u32,
    pub max_input: u16,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self { cutoff: 10, connectivity: Connectivity::Eight, closing_radius: 15, max_input: 16383 }
    }
}

/// A view in the canonical 1024x1536 frame, with the breast mask and the
/// transform that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessedView {
    pub view: ViewLabel,
    pub image: RasterImage,
    pub mask: BinaryMask,
    pub transform: TransformRecord,
}

/// `floor(v * 255 / max_input)` for every sample of a 16-bit image.
pub fn to_8bit(img: &RasterImage, max_input: u16) -> Result<RasterImage, PreprocessError> {
    if img.depth() != BitDepth::Sixteen {
        return Err(PreprocessError::WrongDepth { expected: 16, got: img.depth().bits() });
    }
    if max_input == 0 {
        return Err(PreprocessError::ZeroMaxInput);
    }
    let mut out = Vec::with_capacity(img.samples().len());
    for (index, &value) in img.samples().iter().enumerate() {
        if value > max_input {
            return Err(PreprocessError::RangeExceeded { index, value, max_input });
        }
        out.push((value as u32 * 255 / max_input as u32) as u16);
    }
    Ok(RasterImage::new(img.width(), img.height(), BitDepth::Eight, out).expect("8-bit samples"))
}

/// Foreground wherever the pixel is at least `cutoff`.
pub fn threshold_background(img: &RasterImage, cutoff: u16) -> BinaryMask {
    BinaryMask::new(img.width(), img.height(), img.samples().iter().map(|&v| v >= cutoff).collect())
}

/// Keeps the largest connected component (ties: earliest row-major start).
pub fn largest_component(mask: &BinaryMask, connectivity: Connectivity) -> Result<BinaryMask, PreprocessError> {
    keep_largest(mask, connectivity).ok_or(PreprocessError::NoForeground)
}

/// Symmetric zero-padding that brings `(w, h)` to a 2:3 width:height aspect.
/// Returns `(left, top, right, bottom)`.
fn pad_to_two_by_three(w: u32, h: u32) -> (u32, u32, u32, u32) {
    if (w as u64) * 3 > (h as u64) * 2 {
        let target_h = ((w as u64 * 3).div_ceil(2)) as u32;
        let extra = target_h - h;
        (0, extra / 2, 0, extra - extra / 2)
    } else {
        let target_w = ((h as u64 * 2).div_ceil(3)) as u32;
        let extra = target_w - w;
        (extra / 2, 0, extra - extra / 2, 0)
    }
}

/// Runs the full pipeline on one view.
pub fn preprocess_view(
    img: &RasterImage,
    view: ViewLabel,
    cfg: &PreprocessConfig,
) -> Result<PreprocessedView, PreprocessError> {
    let eight = match img.depth() {
        BitDepth::Sixteen => to_8bit(img, cfg.max_input)?,
        BitDepth::Eight => img.clone(),
    };
    let mask = threshold_background(&eight, cfg.cutoff);
    let breast = largest_component(&mask, cfg.connectivity)?;
    let closed = largest_component(&close_mask(&breast, cfg.closing_radius), cfg.connectivity)?;
    let (x0, y0, x1, y1) = closed.bounding_box().ok_or(PreprocessError::NoForeground)?;
    let (cw, ch) = (x1 - x0 + 1, y1 - y0 + 1);

    let pad = pad_to_two_by_three(cw, ch);
    let (pw, ph) = (cw + pad.0 + pad.2, ch + pad.1 + pad.3);
    let inside = |x: u32, y: u32| {
        x >= pad.0 && y >= pad.1 && x < pad.0 + cw && y < pad.1 + ch && closed.get(x - pad.0 + x0, y - pad.1 + y0)
    };
    let padded_mask = BinaryMask::from_fn(pw, ph, inside);
    let padded_img = RasterImage::from_fn(pw, ph, BitDepth::Eight, |x, y| {
        if inside(x, y) {
            eight.get(x - pad.0 + x0, y - pad.1 + y0)
        } else {
            0
        }
    })
    .expect("8-bit samples");

    let resized_mask = resize::resize_nearest(&padded_mask, CANONICAL_WIDTH, CANONICAL_HEIGHT);
    let mask = largest_component(&resized_mask, cfg.connectivity)?;
    let mut image = resize::resize_bilinear(&padded_img, CANONICAL_WIDTH, CANONICAL_HEIGHT);
    for (v, &m) in image.samples_mut().iter_mut().zip(mask.bits()) {
        if !m {
            *v = 0;
        }
    }

    let transform = TransformRecord {
        original_size: (img.width(), img.height()),
        crop_offset: (x0, y0),
        pre_resize_size: (pw, ph),
        pad,
        scale: (CANONICAL_WIDTH as f64 / pw as f64, CANONICAL_HEIGHT as f64 / ph as f64),
    };
    Ok(PreprocessedView { view, image, mask, transform })
}
