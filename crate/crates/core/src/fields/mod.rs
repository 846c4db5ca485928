//! Uniform 2D grids of real samples and the operators every other module is
//! built on: finite-difference gradients, total variation, L1 distances and
//! zero-padded FFT convolution.

mod fft;
pub mod io;
mod pattern;

pub use fft::{fast_len, Convolver};
pub use pattern::{point_segment_distance, BinaryPattern, Polyline};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::SampledKernel;

/// Real samples on a uniform `nx x ny` grid. Sample `(i, j)` sits at
/// `origin + (i, j) * spacing`; storage is row-major with `i` fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    nx: usize,
    ny: usize,
    spacing: f64,
    origin: [f64; 2],
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(nx: usize, ny: usize, spacing: f64, origin: [f64; 2]) -> Result<Self> {
        Self::from_vec(nx, ny, spacing, origin, vec![0.0; nx * ny])
    }

    pub fn from_vec(nx: usize, ny: usize, spacing: f64, origin: [f64; 2], values: Vec<f64>) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::Config(format!("grid must be at least 2x2, got {nx}x{ny}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Config(format!("grid spacing must be positive, got {spacing}")));
        }
        if values.len() != nx * ny {
            return Err(Error::Config(format!("expected {} samples, got {}", nx * ny, values.len())));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite sample at linear index {bad}")));
        }
        Ok(ScalarField { nx, ny, spacing, origin, values })
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn from_fn(
        nx: usize,
        ny: usize,
        spacing: f64,
        origin: [f64; 2],
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let y = origin[1] + j as f64 * spacing;
            for i in 0..nx {
                values.push(f(origin[0] + i as f64 * spacing, y));
            }
        }
        Self::from_vec(nx, ny, spacing, origin, values)
    }

    /// An `n x n` grid centered on the origin.
    pub fn centered(n: usize, spacing: f64) -> Result<Self> {
        let o = -0.5 * (n as f64 - 1.0) * spacing;
        Self::zeros(n, n, spacing, [o, o])
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::from_vec(self.nx, self.ny, self.spacing, self.origin, values)
    }

    /// Same grid, values produced by `f(x, y)`.
    pub fn like_fn(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(self.nx, self.ny, self.spacing, self.origin, f).expect("grid already validated")
    }

    pub fn zeros_like(&self) -> Self {
        ScalarField { values: vec![0.0; self.values.len()], ..self.clone() }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.values[k] = v;
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + i as f64 * self.spacing, self.origin[1] + j as f64 * self.spacing]
    }

    /// Position of linear index `k`.
    #[inline]
    pub fn position_of(&self, k: usize) -> [f64; 2] {
        self.position(k % self.nx, k / self.nx)
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && (self.spacing - other.spacing).abs() <= 1e-12 * self.spacing
            && (self.origin[0] - other.origin[0]).abs() <= 1e-9 * self.spacing
            && (self.origin[1] - other.origin[1]).abs() <= 1e-9 * self.spacing
    }

    pub fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{}x{} (h={}, origin={:?}) vs {}x{} (h={}, origin={:?})",
                self.nx, self.ny, self.spacing, self.origin, other.nx, other.ny, other.spacing, other.origin
            )))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField { values: self.values.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    /// Elementwise combination; the grids must already agree.
    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        debug_assert!(self.same_grid(other));
        ScalarField {
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            ..self.clone()
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Cell-area weighted sum, the discrete `\int f`.
    pub fn integral(&self) -> f64 {
        self.sum() * self.cell_area()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.cell_area()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, a: f64) -> ScalarField {
        self.map(|v| a * v)
    }

    /// Bilinear interpolation at `(x, y)`; zero outside the sampled rectangle.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let fx = (x - self.origin[0]) / self.spacing;
        let fy = (y - self.origin[1]) / self.spacing;
        if fx < 0.0 || fy < 0.0 || fx > (self.nx - 1) as f64 || fy > (self.ny - 1) as f64 {
            return 0.0;
        }
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let v00 = self.get(i, j);
        let v10 = self.get(i + 1, j);
        let v01 = self.get(i, j + 1);
        let v11 = self.get(i + 1, j + 1);
        (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
    }
}

/// Stencil for the derivative at index `i` of an axis with `n` samples:
/// central in the interior, one-sided second order at the ends (first order
/// when only two samples exist). Coefficients still need a `1/h` factor.
#[inline]
fn diff_stencil(i: usize, n: usize) -> [(isize, f64); 3] {
    if n == 2 {
        return if i == 0 { [(0, -1.0), (1, 1.0), (0, 0.0)] } else { [(-1, -1.0), (0, 1.0), (0, 0.0)] };
    }
    if i == 0 {
        [(0, -1.5), (1, 2.0), (2, -0.5)]
    } else if i == n - 1 {
        [(0, 1.5), (-1, -2.0), (-2, 0.5)]
    } else {
        [(-1, -0.5), (1, 0.5), (0, 0.0)]
    }
}

/// Gradient by central differences inside and second-order one-sided
/// differences on the border.
pub fn gradient(f: &ScalarField) -> (ScalarField, ScalarField) {
    let (nx, ny) = (f.nx, f.ny);
    let inv_h = 1.0 / f.spacing;
    let mut gx = vec![0.0; nx * ny];
    let mut gy = vec![0.0; nx * ny];
    for j in 0..ny {
        let sy = diff_stencil(j, ny);
        for i in 0..nx {
            let sx = diff_stencil(i, nx);
            let mut ax = 0.0;
            for (o, c) in sx {
                ax += c * f.values[j * nx + (i as isize + o) as usize];
            }
            let mut ay = 0.0;
            for (o, c) in sy {
                ay += c * f.values[(j as isize + o) as usize * nx + i];
            }
            gx[j * nx + i] = ax * inv_h;
            gy[j * nx + i] = ay * inv_h;
        }
    }
    (f.with_values(gx).expect("finite"), f.with_values(gy).expect("finite"))
}

/// Transpose of [`gradient`] as a linear map: returns `G^T (wx, wy)`.
pub fn gradient_adjoint(wx: &ScalarField, wy: &ScalarField) -> ScalarField {
    debug_assert!(wx.same_grid(wy));
    let (nx, ny) = (wx.nx, wx.ny);
    let inv_h = 1.0 / wx.spacing;
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        let sy = diff_stencil(j, ny);
        for i in 0..nx {
            let sx = diff_stencil(i, nx);
            let a = wx.values[j * nx + i] * inv_h;
            let b = wy.values[j * nx + i] * inv_h;
            for (o, c) in sx {
                out[j * nx + (i as isize + o) as usize] += c * a;
            }
            for (o, c) in sy {
                out[(j as isize + o) as usize * nx + i] += c * b;
            }
        }
    }
    wx.with_values(out).expect("finite")
}

/// Discrete total variation `\int |\nabla f|`.
pub fn total_variation(f: &ScalarField) -> f64 {
    let (gx, gy) = gradient(f);
    gx.values.iter().zip(&gy.values).map(|(a, b)| a.hypot(*b)).sum::<f64>() * f.cell_area()
}

/// `\int |f - g|` on a shared grid.
pub fn l1_distance(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    f.check_same_grid(g)?;
    Ok(f.values.iter().zip(&g.values).map(|(a, b)| (a - b).abs()).sum::<f64>() * f.cell_area())
}

/// `(f * g)` sampled on `f`'s grid, by zero-padded FFT.
pub fn convolve(f: &ScalarField, g: &SampledKernel) -> Result<ScalarField> {
    Convolver::new(f, g)?.apply(f)
}
