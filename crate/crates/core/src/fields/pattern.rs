use serde::{Deserialize, Serialize};

use super::ScalarField;
use crate::contour::{self, closed_length};
use crate::error::{Error, Result};

pub use crate::contour::Polyline;

/// A {0,1} bitmap together with its sub-pixel boundary.
///
/// The bitmap is decided by cell centers; the contour comes from marching
/// squares on whatever smooth field produced the bitmap, or, for a bare
/// bitmap, from a straightened level-1/2 contour of the bitmap itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryPattern {
    grid: ScalarField,
    contours: Vec<Polyline>,
}

impl BinaryPattern {
    /// `{ field > level }` with the contour traced on `field` at `level`.
    pub fn from_level(field: &ScalarField, level: f64) -> Self {
        let grid = field.map(|v| if v > level { 1.0 } else { 0.0 });
        let contours = contour::marching_squares(field, level);
        BinaryPattern { grid, contours }
    }

    /// Wraps a field that must already be {0,1}-valued.
    pub fn from_bitmap(bitmap: &ScalarField) -> Result<Self> {
        if let Some(k) = bitmap.values().iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Domain(format!("bitmap value {} at index {k} is not 0 or 1", bitmap.values()[k])));
        }
        let h = bitmap.spacing();
        let contours = contour::marching_squares(bitmap, 0.5)
            .iter()
            .map(|p| contour::straighten_bitmap_contour(p, h))
            .collect();
        Ok(BinaryPattern { grid: bitmap.clone(), contours })
    }

    /// Thresholds `field` at `level` and treats the result as a bare bitmap.
    pub fn threshold_bitmap(field: &ScalarField, level: f64) -> Self {
        let grid = field.map(|v| if v > level { 1.0 } else { 0.0 });
        Self::from_bitmap(&grid).expect("thresholded field is binary")
    }

    /// Pairs a bitmap with contours computed elsewhere (e.g. from an exact
    /// signed distance).
    pub(crate) fn from_parts(grid: ScalarField, contours: Vec<Polyline>) -> Self {
        debug_assert!(grid.values().iter().all(|&v| v == 0.0 || v == 1.0));
        BinaryPattern { grid, contours }
    }

    pub fn empty_like(grid: &ScalarField) -> Self {
        BinaryPattern { grid: grid.zeros_like(), contours: Vec::new() }
    }

    pub fn grid(&self) -> &ScalarField {
        &self.grid
    }

    pub fn contours(&self) -> &[Polyline] {
        &self.contours
    }

    pub fn is_empty(&self) -> bool {
        self.grid.values().iter().all(|&v| v == 0.0)
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.grid.get(i, j) == 1.0
    }

    pub fn cell_count(&self) -> usize {
        self.grid.values().iter().filter(|&&v| v == 1.0).count()
    }

    pub fn area(&self) -> f64 {
        self.cell_count() as f64 * self.grid.cell_area()
    }

    /// Total contour length.
    pub fn contour_length(&self) -> f64 {
        self.contours.iter().map(|p| closed_length(p)).sum()
    }

    /// Euclidean distance from `pt` to the nearest contour segment.
    pub fn distance_to_contour(&self, pt: [f64; 2]) -> f64 {
        let mut best = f64::INFINITY;
        for poly in &self.contours {
            let n = poly.len();
            for k in 0..n {
                best = best.min(point_segment_distance(pt, poly[k], poly[(k + 1) % n]));
            }
        }
        best
    }
}

/// Distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_non_binary_bitmaps() {
        let f = ScalarField::centered(8, 1.0).unwrap().map(|_| 0.5);
        assert!(BinaryPattern::from_bitmap(&f).is_err());
    }

    #[test]
    fn bare_bitmap_disk_perimeter_within_two_percent() {
        for (rho, cx) in [(10.0, 0.0), (15.3, 0.37), (20.0, 0.0), (30.7, -0.21)] {
            let f = ScalarField::centered(96, 1.0)
                .unwrap()
                .like_fn(|x, y| if (x - cx).hypot(y - 0.21) < rho { 1.0 } else { 0.0 });
            let p = BinaryPattern::from_bitmap(&f).unwrap();
            let rel = p.contour_length() / (2.0 * PI * rho) - 1.0;
            assert!(rel.abs() < 0.02, "rho {rho}: {rel}");
        }
    }

    #[test]
    fn level_pattern_matches_cell_center_test() {
        let f = ScalarField::centered(32, 0.1).unwrap().like_fn(|x, y| 1.0 - x.hypot(y));
        let p = BinaryPattern::from_level(&f, 0.0);
        for j in 0..32 {
            for i in 0..32 {
                let [x, y] = f.position(i, j);
                assert_eq!(p.contains(i, j), x.hypot(y) < 1.0);
            }
        }
        assert!((p.distance_to_contour([0.0, 0.0]) - 1.0).abs() < 0.01);
    }
}
