//! Pixel-centre aligned resampling.

use crate::types::{BinaryMask, RasterImage};

fn source_coord(dst: u32, scale: f64, src_len: u32) -> f64 {
    ((dst as f64 + 0.5) / scale - 0.5).clamp(0.0, (src_len - 1) as f64)
}

/// Bilinear resample of real-valued samples.
pub fn resize_bilinear_f32(values: &[f32], width: u32, height: u32, out_w: u32, out_h: u32) -> Vec<f32> {
    let (sx, sy) = (out_w as f64 / width as f64, out_h as f64 / height as f64);
    let xs: Vec<(usize, usize, f32)> = (0..out_w)
        .map(|x| {
            let fx = source_coord(x, sx, width);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(width as usize - 1);
            (x0, x1, (fx - x0 as f64) as f32)
        })
        .collect();
    let mut out = Vec::with_capacity(out_w as usize * out_h as usize);
    let w = width as usize;
    for y in 0..out_h {
        let fy = source_coord(y, sy, height);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(height as usize - 1);
        let ty = (fy - y0 as f64) as f32;
        let (r0, r1) = (&values[y0 * w..(y0 + 1) * w], &values[y1 * w..(y1 + 1) * w]);
        for &(x0, x1, tx) in &xs {
            let top = r0[x0] + (r0[x1] - r0[x0]) * tx;
            let bottom = r1[x0] + (r1[x1] - r1[x0]) * tx;
            out.push(top + (bottom - top) * ty);
        }
    }
    out
}

/// Bilinear resample of an image, rounding to the nearest integer sample.
pub fn resize_bilinear(img: &RasterImage, out_w: u32, out_h: u32) -> RasterImage {
    let values: Vec<f32> = img.samples().iter().map(|&v| v as f32).collect();
    let max = img.depth().max_value() as f32;
    let samples = resize_bilinear_f32(&values, img.width(), img.height(), out_w, out_h)
        .into_iter()
        .map(|v| v.round().clamp(0.0, max) as u16)
        .collect();
    RasterImage::new(out_w, out_h, img.depth(), samples).expect("resampled buffer is consistent")
}

pub fn resize_nearest(mask: &BinaryMask, out_w: u32, out_h: u32) -> BinaryMask {
    let (sx, sy) = (out_w as f64 / mask.width() as f64, out_h as f64 / mask.height() as f64);
    let xs: Vec<u32> = (0..out_w).map(|x| (((x as f64 + 0.5) / sx).floor() as u32).min(mask.width() - 1)).collect();
    let mut bits = Vec::with_capacity(out_w as usize * out_h as usize);
    for y in 0..out_h {
        let syi = (((y as f64 + 0.5) / sy).floor() as u32).min(mask.height() - 1);
        bits.extend(xs.iter().map(|&sxi| mask.get(sxi, syi)));
    }
    BinaryMask::new(out_w, out_h, bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::BitDepth;

    #[test]
    fn same_size_is_identity() {
        let img = RasterImage::from_fn(9, 7, BitDepth::Eight, |x, y| (x * 20 + y) as u16).unwrap();
        assert_eq!(resize_bilinear(&img, 9, 7), img);
        let m = BinaryMask::from_fn(9, 7, |x, y| (x + y) % 3 == 0);
        assert_eq!(resize_nearest(&m, 9, 7), m);
    }

    #[test]
    fn constant_stays_constant() {
        let img = RasterImage::from_fn(5, 8, BitDepth::Eight, |_, _| 77).unwrap();
        let out = resize_bilinear(&img, 13, 3);
        assert!(out.samples().iter().all(|&v| v == 77));
    }
}
