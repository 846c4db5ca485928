//! Distances between patterns, perimeter, tubes and simple topology.
//!
//! Hausdorff distances are taken between sets of cell centers using an exact
//! Euclidean distance transform, so they carry an error of at most one cell
//! diagonal relative to the continuum sets.

pub mod shapes;

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::fields::{l1_distance, BinaryPattern, ScalarField};

pub use shapes::{comb, point_in_rings, random_blobs, random_mask, Shape};

/// Perimeter as the total marching-squares contour length.
pub fn perimeter(p: &BinaryPattern) -> f64 {
    p.contour_length()
}

/// Squared distance (in cells) from every cell to the nearest `true` cell;
/// `f64::INFINITY` everywhere if there is none.
pub fn distance_transform_sq(mask: &[bool], nx: usize, ny: usize) -> Vec<f64> {
    assert_eq!(mask.len(), nx * ny);
    let big = f64::INFINITY;
    let mut d: Vec<f64> = mask.iter().map(|&m| if m { 0.0 } else { big }).collect();
    let n = nx.max(ny);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    // columns
    for i in 0..nx {
        for j in 0..ny {
            f[j] = d[j * nx + i];
        }
        edt_1d(&f[..ny], &mut out[..ny], &mut v, &mut z);
        for j in 0..ny {
            d[j * nx + i] = out[j];
        }
    }
    // rows
    for j in 0..ny {
        f[..nx].copy_from_slice(&d[j * nx..(j + 1) * nx]);
        edt_1d(&f[..nx], &mut out[..nx], &mut v, &mut z);
        d[j * nx..(j + 1) * nx].copy_from_slice(&out[..nx]);
    }
    d
}

/// Lower envelope of parabolas (Felzenszwalb & Huttenlocher).
fn edt_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let first = match f.iter().position(|x| x.is_finite()) {
        Some(q) => q,
        None => {
            d.iter_mut().for_each(|x| *x = f64::INFINITY);
            return;
        }
    };
    let mut k = 0;
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        *out = dq * dq + f[p];
    }
}

fn bitmap_mask(p: &BinaryPattern) -> Vec<bool> {
    p.grid().values().iter().map(|&v| v > 0.5).collect()
}

/// Cells of the pattern with a 4-neighbour outside it or on the window edge.
pub fn boundary_cells(p: &BinaryPattern) -> Vec<bool> {
    let g = p.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let inside = bitmap_mask(p);
    let mut out = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            if !inside[k] {
                continue;
            }
            out[k] = i == 0
                || j == 0
                || i + 1 == nx
                || j + 1 == ny
                || !inside[k - 1]
                || !inside[k + 1]
                || !inside[k - nx]
                || !inside[k + nx];
        }
    }
    out
}

/// Symmetric Hausdorff distance between two cell sets on an `nx × ny` grid
/// with spacing `h`. Both sets must be nonempty.
fn hausdorff_cells(a: &[bool], b: &[bool], nx: usize, ny: usize, h: f64) -> f64 {
    let directed = |from: &[bool], to: &[bool]| {
        let dt = distance_transform_sq(to, nx, ny);
        from.iter().zip(&dt).filter(|(f, _)| **f).map(|(_, d)| *d).fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a)).sqrt() * h
}

fn require_nonempty(mask: &[bool], what: &str) -> Result<()> {
    if mask.iter().any(|&m| m) {
        Ok(())
    } else {
        Err(Error::Domain(format!("Hausdorff distance of an empty {what}")))
    }
}

/// `d̃₁`: Hausdorff distance between the boundaries.
pub fn hausdorff_boundary(p: &BinaryPattern, q: &BinaryPattern) -> Result<f64> {
    p.grid().check_same_grid(q.grid())?;
    let (a, b) = (boundary_cells(p), boundary_cells(q));
    require_nonempty(&a, "boundary")?;
    require_nonempty(&b, "boundary")?;
    let g = p.grid();
    Ok(hausdorff_cells(&a, &b, g.nx(), g.ny(), g.spacing()))
}

/// `d₁`: Hausdorff distance between the filled sets.
pub fn hausdorff_closure(p: &BinaryPattern, q: &BinaryPattern) -> Result<f64> {
    p.grid().check_same_grid(q.grid())?;
    let (a, b) = (bitmap_mask(p), bitmap_mask(q));
    require_nonempty(&a, "pattern")?;
    require_nonempty(&b, "pattern")?;
    let g = p.grid();
    Ok(hausdorff_cells(&a, &b, g.nx(), g.ny(), g.spacing()))
}

/// All pattern distances at once. The Hausdorff entries are `0` for two
/// empty patterns and `inf` when exactly one is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub d1: ExtReal,
    pub d1_tilde: ExtReal,
    pub d2: f64,
    pub d3: f64,
    pub perimeter_a: f64,
    pub perimeter_b: f64,
}

impl DistanceReport {
    pub const CSV_HEADER: &'static str = "d1,d1_tilde,d2,d3,perimeter_a,perimeter_b";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.d1, self.d1_tilde, self.d2, self.d3, self.perimeter_a, self.perimeter_b
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row())
    }
}

fn hausdorff_or_sentinel(a: &[bool], b: &[bool], g: &ScalarField) -> ExtReal {
    match (a.iter().any(|&x| x), b.iter().any(|&x| x)) {
        (false, false) => ExtReal::ZERO,
        (true, true) => ExtReal::Finite(hausdorff_cells(a, b, g.nx(), g.ny(), g.spacing())),
        _ => ExtReal::Infinite,
    }
}

/// `d₃ = d₂ + |P(p) − P(q)|` together with `d₁`, `d̃₁`, `d₂` and both
/// perimeters.
pub fn strict_distance(p: &BinaryPattern, q: &BinaryPattern) -> Result<DistanceReport> {
    let g = p.grid();
    g.check_same_grid(q.grid())?;
    let d2 = l1_distance(p.grid(), q.grid())?;
    let (pa, pb) = (perimeter(p), perimeter(q));
    Ok(DistanceReport {
        d1: hausdorff_or_sentinel(&bitmap_mask(p), &bitmap_mask(q), g),
        d1_tilde: hausdorff_or_sentinel(&boundary_cells(p), &boundary_cells(q), g),
        d2,
        d3: d2 + (pa - pb).abs(),
        perimeter_a: pa,
        perimeter_b: pb,
    })
}

fn dilate(mask: &[bool], g: &ScalarField, r: f64) -> ScalarField {
    let h = g.spacing();
    let limit = (r / h) * (r / h) + 1e-9;
    let dt = distance_transform_sq(mask, g.nx(), g.ny());
    let values = dt.iter().map(|&d| if d <= limit { 1.0 } else { 0.0 }).collect();
    g.with_values(values).expect("same grid")
}

/// Signed distance to the pattern boundary (positive inside), from the
/// distance transforms of the pattern and its complement. Cell centers sit
/// half a cell from the boundary they border.
pub fn signed_distance(p: &BinaryPattern) -> ScalarField {
    let g = p.grid();
    let (nx, ny, h) = (g.nx(), g.ny(), g.spacing());
    let inside = bitmap_mask(p);
    let outside: Vec<bool> = inside.iter().map(|&m| !m).collect();
    let far = (nx.max(ny) as f64) * h;
    let to_in = distance_transform_sq(&inside, nx, ny);
    let to_out = distance_transform_sq(&outside, nx, ny);
    let values = inside
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let d = if m { to_out[k] } else { to_in[k] };
            let d = if d.is_finite() { (d.sqrt() - 0.5) * h } else { far };
            if m {
                d
            } else {
                -d
            }
        })
        .collect();
    g.with_values(values).expect("finite")
}

/// Dilation `B_r(E)`: cells whose center lies within `r` of a cell of `E`.
pub fn tube(p: &BinaryPattern, r: f64) -> Result<BinaryPattern> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("tube radius must be nonnegative, got {r}")));
    }
    if r == 0.0 {
        return Ok(p.clone());
    }
    BinaryPattern::from_bitmap(&dilate(&bitmap_mask(p), p.grid(), r))
}

/// Cells whose center lies within `r` of the contour of `p`.
pub fn boundary_tube(p: &BinaryPattern, r: f64) -> ScalarField {
    let g = p.grid();
    // Coarse candidate set from the boundary cells, then the exact contour
    // distance.
    let coarse = dilate(&boundary_cells(p), g, r + 2.0 * g.spacing());
    let mut out = g.zeros_like();
    for k in 0..out.len() {
        if coarse.values()[k] == 1.0 && p.distance_to_contour(g.position_of(k)) <= r {
            out.values_mut()[k] = 1.0;
        }
    }
    out
}

fn count_components(mask: &[bool], nx: usize, ny: usize, eight: bool, skip_edge: bool) -> usize {
    let mut seen = vec![false; mask.len()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    let offsets: &[(isize, isize)] = if eight {
        &[(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]
    } else {
        &[(0, -1), (-1, 0), (1, 0), (0, 1)]
    };
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut touches_edge = false;
        while let Some(k) = queue.pop_front() {
            let (i, j) = ((k % nx) as isize, (k / nx) as isize);
            if i == 0 || j == 0 || i as usize + 1 == nx || j as usize + 1 == ny {
                touches_edge = true;
            }
            for &(di, dj) in offsets {
                let (a, b) = (i + di, j + dj);
                if a < 0 || b < 0 || a as usize >= nx || b as usize >= ny {
                    continue;
                }
                let n = b as usize * nx + a as usize;
                if mask[n] && !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
        if !(skip_edge && touches_edge) {
            count += 1;
        }
    }
    count
}

/// Number of 8-connected components of the pattern.
pub fn components(p: &BinaryPattern) -> usize {
    let g = p.grid();
    count_components(&bitmap_mask(p), g.nx(), g.ny(), true, false)
}

/// Number of holes: 4-connected components of the complement that do not
/// reach the window edge.
pub fn holes(p: &BinaryPattern) -> usize {
    let g = p.grid();
    let outside: Vec<bool> = bitmap_mask(p).iter().map(|&m| !m).collect();
    count_components(&outside, g.nx(), g.ny(), false, true)
}

/// Upper bound `48 √(1+L²) R² / r` on the perimeter of a set in `B_R` whose
/// boundary is locally a Lipschitz graph with constant `L` at scale `r`.
pub fn perimeter_bound(r: f64, lipschitz: f64, radius: f64) -> f64 {
    48.0 * (1.0 + lipschitz * lipschitz).sqrt() * radius * radius / r
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PolygonFile {
    Shape(Shape),
    Rings { rings: Vec<Vec<[f64; 2]>> },
    Bare(Vec<Vec<[f64; 2]>>),
}

/// Reads a polygon JSON file: either a tagged [`Shape`], an object
/// `{"rings": [[[x, y], ...], ...]}` or a bare list of rings.
pub fn read_shape_json(path: &Path) -> Result<Shape> {
    let text = std::fs::read_to_string(path)?;
    let parsed: PolygonFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let shape = match parsed {
        PolygonFile::Shape(s) => s,
        PolygonFile::Rings { rings } | PolygonFile::Bare(rings) => Shape::Polygons { rings },
    };
    if let Shape::Polygons { rings } = &shape {
        if rings.iter().any(|r| r.len() < 3) {
            return Err(Error::Parse(format!("{}: polygon ring with fewer than 3 vertices", path.display())));
        }
    }
    Ok(shape)
}
