//! Binary closing with a disc, plus square grey-level min/max filters.
//!
//! Binary morphology goes through an exact squared Euclidean distance
//! transform, so a disc of radius `r` costs the same as a disc of radius 1.

use crate::types::BinaryMask;

const FAR: f64 = 1e20;

/// One-dimensional lower envelope of parabolas (Felzenszwalb & Huttenlocher).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let mut s;
        loop {
            let p = v[k];
            s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * q as f64 - 2.0 * p as f64);
            if s > z[k] {
                break;
            }
            k -= 1;
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared distance from every cell to the nearest `true` cell.
pub fn squared_distance_to(seeds: &[bool], width: usize, height: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = seeds.iter().map(|&s| if s { 0.0 } else { FAR }).collect();
    let n = width.max(height);
    let (mut f, mut out, mut v, mut z) = (vec![0.0; n], vec![0.0; n], vec![0usize; n], vec![0.0; n + 1]);
    for x in 0..width {
        for y in 0..height {
            f[y] = grid[y * width + x];
        }
        edt_1d(&f[..height], &mut out[..height], &mut v, &mut z);
        for y in 0..height {
            grid[y * width + x] = out[y];
        }
    }
    for y in 0..height {
        let row = &mut grid[y * width..(y + 1) * width];
        f[..width].copy_from_slice(row);
        edt_1d(&f[..width], &mut out[..width], &mut v, &mut z);
        row.copy_from_slice(&out[..width]);
    }
    grid
}

/// Dilation by the disc `{d^2 <= r^2}`; pixels beyond the border count as background.
pub fn dilate_disc(mask: &BinaryMask, radius: u32) -> BinaryMask {
    let d = squared_distance_to(mask.bits(), mask.width() as usize, mask.height() as usize);
    let r2 = (radius as f64) * (radius as f64);
    BinaryMask::new(mask.width(), mask.height(), d.iter().map(|&v| v <= r2).collect())
}

/// Erosion by the disc; pixels beyond the border count as foreground.
pub fn erode_disc(mask: &BinaryMask, radius: u32) -> BinaryMask {
    let inverted: Vec<bool> = mask.bits().iter().map(|&b| !b).collect();
    if !inverted.iter().any(|&b| b) {
        return mask.clone();
    }
    let d = squared_distance_to(&inverted, mask.width() as usize, mask.height() as usize);
    let r2 = (radius as f64) * (radius as f64);
    BinaryMask::new(mask.width(), mask.height(), d.iter().map(|&v| v > r2).collect())
}

/// Morphological closing (dilation then erosion) with a disc of `radius`.
///
/// Computed on a canvas padded by `radius + 1` so the result equals the
/// closing in the unbounded plane restricted to the image: it is extensive
/// and idempotent, and border pixels are never eroded away.
pub fn close_mask(mask: &BinaryMask, radius: u32) -> BinaryMask {
    if radius == 0 || mask.is_empty() {
        return mask.clone();
    }
    let pad = radius + 1;
    let (w, h) = (mask.width(), mask.height());
    let (pw, ph) = (w + 2 * pad, h + 2 * pad);
    let padded = BinaryMask::from_fn(pw, ph, |x, y| {
        x >= pad && y >= pad && x < pad + w && y < pad + h && mask.get(x - pad, y - pad)
    });
    let closed = erode_disc(&dilate_disc(&padded, radius), radius);
    BinaryMask::from_fn(w, h, |x, y| closed.get(x + pad, y + pad))
}

fn filter_1d(src: &[f32], dst: &mut [f32], radius: usize, stride: usize, len: usize, take_max: bool) {
    for i in 0..len {
        let lo = i.saturating_sub(radius);
        let hi = (i + radius).min(len - 1);
        let mut acc = src[lo * stride];
        for j in lo + 1..=hi {
            let v = src[j * stride];
            acc = if take_max { acc.max(v) } else { acc.min(v) };
        }
        dst[i * stride] = acc;
    }
}

fn square_filter(values: &[f32], width: usize, height: usize, radius: usize, take_max: bool) -> Vec<f32> {
    let mut tmp = vec![0.0; values.len()];
    for y in 0..height {
        let row = y * width;
        filter_1d(&values[row..row + width], &mut tmp[row..row + width], radius, 1, width, take_max);
    }
    // Vertical pass row by row so the inner loop runs over contiguous memory.
    let mut out = vec![0.0; values.len()];
    for y in 0..height {
        let (lo, hi) = (y.saturating_sub(radius), (y + radius).min(height - 1));
        let dst = &mut out[y * width..(y + 1) * width];
        dst.copy_from_slice(&tmp[lo * width..(lo + 1) * width]);
        for j in lo + 1..=hi {
            let src = &tmp[j * width..(j + 1) * width];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = if take_max { d.max(s) } else { d.min(s) };
            }
        }
    }
    out
}

/// Grey-level erosion over a `(2r+1)^2` square; the window is clipped at the border.
pub fn min_filter(values: &[f32], width: usize, height: usize, radius: usize) -> Vec<f32> {
    square_filter(values, width, height, radius, false)
}

/// Grey-level dilation over a `(2r+1)^2` square; the window is clipped at the border.
pub fn max_filter(values: &[f32], width: usize, height: usize, radius: usize) -> Vec<f32> {
    square_filter(values, width, height, radius, true)
}

/// White top-hat: `values - opening(values)`.
pub fn white_top_hat(values: &[f32], width: usize, height: usize, radius: usize) -> Vec<f32> {
    let opened = max_filter(&min_filter(values, width, height, radius), width, height, radius);
    values.iter().zip(&opened).map(|(v, o)| (v - o).max(0.0)).collect()
}
