//! Connected-component labelling on binary masks.

use serde::{Deserialize, Serialize};

use crate::types::{BinaryMask, PixelSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl TryFrom<u8> for Connectivity {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(format!("connectivity must be 4 or 8, got {other}")),
        }
    }
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        match c {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

const N4: [(i32, i32); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
const N8: [(i32, i32); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

impl Connectivity {
    fn offsets(self) -> &'static [(i32, i32)] {
        match self {
            Connectivity::Four => &N4,
            Connectivity::Eight => &N8,
        }
    }
}

/// Labels foreground pixels; label 0 is background and component `k` gets
/// label `k + 1`. Components are numbered in order of their first pixel in
/// row-major order. Returns the label buffer and per-component sizes.
pub fn label_components(mask: &BinaryMask, connectivity: Connectivity) -> (Vec<u32>, Vec<usize>) {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let bits = mask.bits();
    let mut labels = vec![0u32; bits.len()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..bits.len() {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        let label = sizes.len() as u32 + 1;
        labels[start] = label;
        stack.push(start);
        let mut size = 0usize;
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = ((i as i64) % w, (i as i64) / w);
            for &(dx, dy) in connectivity.offsets() {
                let (nx, ny) = (x + dx as i64, y + dy as i64);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let j = (ny * w + nx) as usize;
                if bits[j] && labels[j] == 0 {
                    labels[j] = label;
                    stack.push(j);
                }
            }
        }
        sizes.push(size);
    }
    (labels, sizes)
}

/// All components as pixel sets, in first-pixel row-major order.
pub fn components(mask: &BinaryMask, connectivity: Connectivity) -> Vec<PixelSet> {
    let (labels, sizes) = label_components(mask, connectivity);
    let mut out: Vec<Vec<u32>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
    for (i, &l) in labels.iter().enumerate() {
        if l > 0 {
            out[l as usize - 1].push(i as u32);
        }
    }
    out.into_iter().map(|v| PixelSet::from_indices(mask.width(), v)).collect()
}

pub fn count_components(mask: &BinaryMask, connectivity: Connectivity) -> usize {
    label_components(mask, connectivity).1.len()
}

/// Keeps only the largest component; equal sizes go to the one whose first
/// pixel comes earliest in row-major order. `None` if the mask is empty.
pub fn keep_largest(mask: &BinaryMask, connectivity: Connectivity) -> Option<BinaryMask> {
    let (labels, sizes) = label_components(mask, connectivity);
    let mut best: Option<(usize, usize)> = None;
    for (k, &s) in sizes.iter().enumerate() {
        if best.is_none_or(|(_, bs)| s > bs) {
            best = Some((k, s));
        }
    }
    let (k, _) = best?;
    let keep = k as u32 + 1;
    Some(BinaryMask::new(mask.width(), mask.height(), labels.iter().map(|&l| l == keep).collect()))
}
