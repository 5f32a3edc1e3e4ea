//! Polygon validation, rasterisation and frame transforms.

use crate::types::{Frame, PixelSet, Region, TransformRecord, CANONICAL_HEIGHT, CANONICAL_WIDTH};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("polygon has {0} points, need at least 3")]
    TooFewPoints(usize),
    #[error("polygon point ({x}, {y}) lies outside the {width}x{height} frame")]
    OutOfBounds { x: f64, y: f64, width: u32, height: u32 },
    #[error("polygon is self-intersecting")]
    SelfIntersecting,
    #[error("polygon coordinates must be finite")]
    NonFinite,
    #[error("region is in the {found:?} frame, expected {expected:?}")]
    FrameMismatch { expected: Frame, found: Frame },
}

fn orientation(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn segments_intersect(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let d1 = orientation(q1, q2, p1);
    let d2 = orientation(q1, q2, p2);
    let d3 = orientation(p1, p2, q1);
    let d4 = orientation(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// True when no two non-adjacent edges of the closed polygon touch.
pub fn is_simple(polygon: &[(f64, f64)]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a1, a2) = (polygon[i], polygon[(i + 1) % n]);
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (b1, b2) = (polygon[j], polygon[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

/// Checks point count, finiteness, bounds `[0, width] x [0, height]` and simplicity.
pub fn validate_polygon(polygon: &[(f64, f64)], width: u32, height: u32) -> Result<(), GeometryError> {
    if polygon.len() < 3 {
        return Err(GeometryError::TooFewPoints(polygon.len()));
    }
    for &(x, y) in polygon {
        if !x.is_finite() || !y.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if x < 0.0 || y < 0.0 || x > width as f64 || y > height as f64 {
            return Err(GeometryError::OutOfBounds { x, y, width, height });
        }
    }
    if !is_simple(polygon) {
        return Err(GeometryError::SelfIntersecting);
    }
    Ok(())
}

/// Pixels whose centre lies inside the polygon (even-odd rule), clipped to the raster.
pub fn rasterize_polygon(polygon: &[(f64, f64)], width: u32, height: u32) -> PixelSet {
    let mut indices = Vec::new();
    let n = polygon.len();
    if n < 3 {
        return PixelSet::from_indices(width, indices);
    }
    let ymin = polygon.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let ymax = polygon.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let row_start = (ymin - 0.5).ceil().max(0.0) as u32;
    let row_end = ((ymax - 0.5).floor().max(-1.0) as i64 + 1).min(height as i64).max(0) as u32;
    let mut xs = Vec::new();
    for y in row_start..row_end {
        let yc = y as f64 + 0.5;
        xs.clear();
        for i in 0..n {
            let (a, b) = (polygon[i], polygon[(i + 1) % n]);
            if (a.1 > yc) != (b.1 > yc) {
                xs.push(a.0 + (yc - a.1) * (b.0 - a.0) / (b.1 - a.1));
            }
        }
        xs.sort_by(|p, q| p.total_cmp(q));
        for pair in xs.chunks_exact(2) {
            let start = (pair[0] - 0.5).ceil().max(0.0) as i64;
            let end = ((pair[1] - 0.5).ceil() as i64).min(width as i64);
            for x in start..end {
                indices.push(y * width + x as u32);
            }
        }
    }
    PixelSet::from_indices(width, indices)
}

/// Rasterises a canonical-frame region.
pub fn rasterize_region(region: &Region) -> Result<PixelSet, GeometryError> {
    if region.frame != Frame::Canonical {
        return Err(GeometryError::FrameMismatch { expected: Frame::Canonical, found: region.frame });
    }
    Ok(rasterize_polygon(&region.polygon, CANONICAL_WIDTH, CANONICAL_HEIGHT))
}

/// Maps an original-frame region into the canonical frame, clamping to its bounds.
pub fn transform_region(region: &Region, rec: &TransformRecord) -> Result<Region, GeometryError> {
    if region.frame != Frame::Original {
        return Err(GeometryError::FrameMismatch { expected: Frame::Original, found: region.frame });
    }
    Ok(Region { polygon: region.polygon.iter().map(|&p| rec.forward_point(p)).collect(), frame: Frame::Canonical })
}

/// Maps a canonical-frame region back to original coordinates.
pub fn inverse_transform_region(region: &Region, rec: &TransformRecord) -> Result<Region, GeometryError> {
    if region.frame != Frame::Canonical {
        return Err(GeometryError::FrameMismatch { expected: Frame::Canonical, found: region.frame });
    }
    Ok(Region { polygon: region.polygon.iter().map(|&p| rec.inverse_point(p)).collect(), frame: Frame::Original })
}
