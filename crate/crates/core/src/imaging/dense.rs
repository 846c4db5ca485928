//! Dense evaluation of the Hopkins quadratic form.
//!
//! With `S` the cells where the mask may be nonzero and `A[x, ξ] = K(x - ξ)`
//! for every output cell `x` and `ξ ∈ S`, the intensity is
//!
//! ```text
//! I(x) = h⁴ Σ_{ξ,η ∈ S} A[x,ξ] u_ξ J(ξ-η) u_η A[x,η] = h⁴ rowsum(A ∘ (A M)),
//! M = diag(u_S) J_SS diag(u_S),
//! ```
//!
//! evaluated in row blocks so that only one block of `A` is alive at a time.

use ndarray::{Array2, ArrayView2};

/// Translation-invariant table `t(di, dj)` for offsets within `±(n-1)`.
pub(crate) struct OffsetTable {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl OffsetTable {
    pub(crate) fn new(nx: usize, ny: usize, f: impl Fn(isize, isize) -> f64) -> Self {
        let (w, h) = (2 * nx - 1, 2 * ny - 1);
        let mut values = Vec::with_capacity(w * h);
        for dj in 0..h {
            for di in 0..w {
                values.push(f(di as isize - (nx as isize - 1), dj as isize - (ny as isize - 1)));
            }
        }
        OffsetTable { nx, ny, values }
    }

    #[inline]
    pub(crate) fn at(&self, di: isize, dj: isize) -> f64 {
        let i = (di + self.nx as isize - 1) as usize;
        let j = (dj + self.ny as isize - 1) as usize;
        self.values[j * (2 * self.nx - 1) + i]
    }

    /// Value between flat cell indices `a` and `b` of an `nx`-wide grid.
    #[inline]
    pub(crate) fn between(&self, a: usize, b: usize) -> f64 {
        let (ai, aj) = ((a % self.nx) as isize, (a / self.nx) as isize);
        let (bi, bj) = ((b % self.nx) as isize, (b / self.nx) as isize);
        self.at(ai - bi, aj - bj)
    }
}

const BLOCK: usize = 256;

fn kernel_block(k: &OffsetTable, rows: std::ops::Range<usize>, cells: &[usize]) -> Array2<f64> {
    let mut a = Array2::zeros((rows.len(), cells.len()));
    for (r, x) in rows.enumerate() {
        for (c, &xi) in cells.iter().enumerate() {
            a[[r, c]] = k.between(x, xi);
        }
    }
    a
}

/// `diag(u) J diag(u)` on `cells`; `j = None` means `J ≡ 1`.
pub(crate) fn coupling(u: &[f64], cells: &[usize], j: Option<&OffsetTable>) -> Array2<f64> {
    let m = cells.len();
    let mut out = Array2::zeros((m, m));
    for (p, &a) in cells.iter().enumerate() {
        for (q, &b) in cells.iter().enumerate() {
            let jv = j.map_or(1.0, |t| t.between(a, b));
            out[[p, q]] = u[a] * jv * u[b];
        }
    }
    out
}

/// Intensity on all `n_out` cells. `cell_area` is `h²`.
pub(crate) fn intensity(k: &OffsetTable, n_out: usize, cells: &[usize], m: ArrayView2<f64>, cell_area: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_out];
    if cells.is_empty() {
        return out;
    }
    let w = cell_area * cell_area;
    let mut start = 0;
    while start < n_out {
        let rows = start..(start + BLOCK).min(n_out);
        let a = kernel_block(k, rows.clone(), cells);
        let am = a.dot(&m);
        for (r, x) in rows.enumerate() {
            let s: f64 = a.row(r).iter().zip(am.row(r)).map(|(p, q)| p * q).sum();
            out[x] = w * s;
        }
        start += BLOCK;
    }
    out
}

/// Gradient of `Σ_x g_x I(x)` with respect to `u` on `cells`:
/// `2 h⁴ Σ_x g_x A[x,ξ] (A diag(u) J)[x,ξ]`.
pub(crate) fn intensity_vjp(
    k: &OffsetTable,
    g: &[f64],
    u: &[f64],
    cells: &[usize],
    j: Option<&OffsetTable>,
    cell_area: f64,
) -> Vec<f64> {
    let mut grad = vec![0.0; u.len()];
    if cells.is_empty() {
        return grad;
    }
    let m = cells.len();
    // diag(u) J, so that A (diag(u) J) = A diag(u) J
    let mut uj = Array2::zeros((m, m));
    for (p, &a) in cells.iter().enumerate() {
        for (q, &b) in cells.iter().enumerate() {
            uj[[p, q]] = u[a] * j.map_or(1.0, |t| t.between(a, b));
        }
    }
    let w = 2.0 * cell_area * cell_area;
    let mut acc = vec![0.0; m];
    let n_out = g.len();
    let mut start = 0;
    while start < n_out {
        let rows: Vec<usize> = (start..(start + BLOCK).min(n_out)).filter(|&x| g[x] != 0.0).collect();
        start += BLOCK;
        if rows.is_empty() {
            continue;
        }
        let mut a = Array2::zeros((rows.len(), m));
        for (r, &x) in rows.iter().enumerate() {
            for (c, &xi) in cells.iter().enumerate() {
                a[[r, c]] = k.between(x, xi);
            }
        }
        let b = a.dot(&uj);
        for (r, &x) in rows.iter().enumerate() {
            let gx = g[x];
            for c in 0..m {
                acc[c] += gx * a[[r, c]] * b[[r, c]];
            }
        }
    }
    for (c, &xi) in cells.iter().enumerate() {
        grad[xi] = w * acc[c];
    }
    grad
}
