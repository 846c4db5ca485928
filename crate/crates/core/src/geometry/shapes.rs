//! Test shapes: exact signed distances, cell-center rasterization and
//! patterns with sub-pixel contours.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fields::{BinaryPattern, ScalarField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Disk { center: [f64; 2], radius: f64 },
    /// Axis-aligned rectangle.
    Rect { center: [f64; 2], half: [f64; 2] },
    /// Even-odd union of closed polygons (so inner rings are holes).
    Polygons { rings: Vec<Vec<[f64; 2]>> },
    /// Union of shapes.
    Union { parts: Vec<Shape> },
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    crate::fields::point_segment_distance(p, a, b)
}

/// Even-odd point-in-polygon test over all rings.
pub fn point_in_rings(p: [f64; 2], rings: &[Vec<[f64; 2]>]) -> bool {
    let mut inside = false;
    for ring in rings {
        let n = ring.len();
        for k in 0..n {
            let a = ring[k];
            let b = ring[(k + 1) % n];
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

impl Shape {
    pub fn disk(cx: f64, cy: f64, radius: f64) -> Self {
        Shape::Disk { center: [cx, cy], radius }
    }

    pub fn rect(cx: f64, cy: f64, half_w: f64, half_h: f64) -> Self {
        Shape::Rect { center: [cx, cy], half: [half_w, half_h] }
    }

    pub fn square(cx: f64, cy: f64, side: f64) -> Self {
        Shape::rect(cx, cy, side / 2.0, side / 2.0)
    }

    /// Signed distance, positive inside.
    pub fn sdf(&self, p: [f64; 2]) -> f64 {
        match self {
            Shape::Disk { center, radius } => radius - (p[0] - center[0]).hypot(p[1] - center[1]),
            Shape::Rect { center, half } => {
                let dx = (p[0] - center[0]).abs() - half[0];
                let dy = (p[1] - center[1]).abs() - half[1];
                let outside = dx.max(0.0).hypot(dy.max(0.0));
                let inside = dx.max(dy).min(0.0);
                -(outside + inside)
            }
            Shape::Polygons { rings } => {
                let mut d = f64::INFINITY;
                for ring in rings {
                    let n = ring.len();
                    for k in 0..n {
                        d = d.min(segment_distance(p, ring[k], ring[(k + 1) % n]));
                    }
                }
                if point_in_rings(p, rings) {
                    d
                } else {
                    -d
                }
            }
            Shape::Union { parts } => parts.iter().map(|s| s.sdf(p)).fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            Shape::Polygons { rings } => point_in_rings(p, rings),
            Shape::Union { parts } => parts.iter().any(|s| s.contains(p)),
            _ => self.sdf(p) > 0.0,
        }
    }

    /// Exact perimeter where it is known in closed form.
    pub fn perimeter(&self) -> Option<f64> {
        match self {
            Shape::Disk { radius, .. } => Some(2.0 * std::f64::consts::PI * radius),
            Shape::Rect { half, .. } => Some(4.0 * (half[0] + half[1])),
            Shape::Polygons { rings } => Some(rings.iter().map(|r| crate::contour::closed_length(r)).sum()),
            Shape::Union { .. } => None,
        }
    }

    /// Cell-center indicator on `grid`.
    pub fn rasterize(&self, grid: &ScalarField) -> ScalarField {
        let mut out = grid.zeros_like();
        for k in 0..out.len() {
            if self.contains(grid.position_of(k)) {
                out.values_mut()[k] = 1.0;
            }
        }
        out
    }

    /// Pattern whose bitmap is the cell-center rasterization and whose
    /// contour is the zero level of the signed distance.
    pub fn pattern(&self, grid: &ScalarField) -> BinaryPattern {
        let sdf = self.signed_distance_field(grid);
        let bitmap = self.rasterize(grid);
        BinaryPattern::from_parts(bitmap, crate::contour::marching_squares(&sdf, 0.0))
    }

    pub fn signed_distance_field(&self, grid: &ScalarField) -> ScalarField {
        let mut out = grid.zeros_like();
        for k in 0..out.len() {
            out.values_mut()[k] = self.sdf(grid.position_of(k));
        }
        out
    }
}

/// A rectangle `[-a, a] × [-b, b]` with `teeth` slits of depth `depth`
/// cut from its top edge, the slits together removing area `removed`.
/// With `removed` fixed, the area difference to the plain rectangle stays
/// put while the perimeter difference grows like `2 teeth depth`.
pub fn comb(a: f64, b: f64, teeth: usize, depth: f64, removed: f64) -> Shape {
    let width = removed / (teeth as f64 * depth);
    let mut outline = vec![[-a, -b], [a, -b], [a, b]];
    let pitch = 2.0 * a / teeth as f64;
    for t in (0..teeth).rev() {
        let xc = -a + (t as f64 + 0.5) * pitch;
        outline.push([xc + width / 2.0, b]);
        outline.push([xc + width / 2.0, b - depth]);
        outline.push([xc - width / 2.0, b - depth]);
        outline.push([xc - width / 2.0, b]);
    }
    outline.push([-a, b]);
    Shape::Polygons { rings: vec![outline] }
}

/// Union of `count` random disks and rectangles inside `[-extent, extent]²`,
/// reproducible from `seed`.
pub fn random_blobs(seed: u64, count: usize, extent: f64, min_size: f64, max_size: f64) -> Shape {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts = Vec::with_capacity(count);
    for _ in 0..count {
        let size = rng.gen_range(min_size..=max_size);
        let lim = (extent - size).max(0.0);
        let c = [rng.gen_range(-lim..=lim), rng.gen_range(-lim..=lim)];
        if rng.gen_bool(0.5) {
            parts.push(Shape::Disk { center: c, radius: size });
        } else {
            let aspect = rng.gen_range(0.5..=1.0);
            parts.push(Shape::Rect { center: c, half: [size, size * aspect] });
        }
    }
    Shape::Union { parts }
}

/// Random mask values in `[0, 1]` on the cells where `support` is 1: a
/// random binary blob picture, optionally softened by `blend` toward
/// uniform noise.
pub fn random_mask(grid: &ScalarField, support: &ScalarField, seed: u64, blend: f64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let lo = grid.origin();
    let hi = grid.position(grid.nx() - 1, grid.ny() - 1);
    let half = 0.5 * (hi[0] - lo[0]).min(hi[1] - lo[1]);
    let blobs = random_blobs(seed, rng.gen_range(2..=5), half, 0.1 * half, 0.35 * half);
    let bitmap = blobs.rasterize(grid);
    let mut out = grid.zeros_like();
    for k in 0..out.len() {
        if support.values()[k] == 1.0 {
            let noise: f64 = rng.gen();
            out.values_mut()[k] = (1.0 - blend) * bitmap.values()[k] + blend * noise;
        }
    }
    out
}
