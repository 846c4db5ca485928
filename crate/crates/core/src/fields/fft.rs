use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::ScalarField;
use crate::error::{Error, Result};
use crate::kernels::SampledKernel;

/// Smallest `m >= n` of the form `2^a 3^b 5^c`.
pub fn fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

struct Plan2d {
    w: usize,
    h: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Plan2d {
    fn new(w: usize, h: usize) -> Self {
        let mut planner = FftPlanner::new();
        Plan2d {
            w,
            h,
            row_fwd: planner.plan_fft_forward(w),
            row_inv: planner.plan_fft_inverse(w),
            col_fwd: planner.plan_fft_forward(h),
            col_inv: planner.plan_fft_inverse(h),
        }
    }

    fn run(&self, data: &mut [Complex<f64>], inverse: bool) {
        let (rows, cols) = if inverse { (&self.row_inv, &self.col_inv) } else { (&self.row_fwd, &self.col_fwd) };
        let mut scratch = vec![Complex::default(); rows.get_inplace_scratch_len().max(cols.get_inplace_scratch_len())];
        for line in data.chunks_exact_mut(self.w) {
            rows.process_with_scratch(line, &mut scratch);
        }
        let mut t = vec![Complex::default(); self.w * self.h];
        for j in 0..self.h {
            for i in 0..self.w {
                t[i * self.h + j] = data[j * self.w + i];
            }
        }
        for line in t.chunks_exact_mut(self.h) {
            cols.process_with_scratch(line, &mut scratch);
        }
        for j in 0..self.h {
            for i in 0..self.w {
                data[j * self.w + i] = t[i * self.h + j];
            }
        }
    }
}

/// Linear ("same"-mode) convolution with one kernel on one grid shape, with
/// the padded kernel spectrum computed once. Both the forward map and its
/// adjoint (convolution with the reflected kernel) are available.
pub struct Convolver {
    nx: usize,
    ny: usize,
    spacing: f64,
    cx: usize,
    cy: usize,
    plan: Plan2d,
    spectrum: Vec<Complex<f64>>,
    spectrum_reflected: Vec<Complex<f64>>,
}

impl Convolver {
    /// Prepares convolution of fields shaped like `f` with `kernel`.
    ///
    /// Kernel samples farther than the field extent from the center can never
    /// reach an output sample and are dropped.
    pub fn new(f: &ScalarField, kernel: &SampledKernel) -> Result<Self> {
        let h = f.spacing();
        if (kernel.spacing() - h).abs() > 1e-9 * h {
            return Err(Error::GridMismatch(format!(
                "kernel spacing {} differs from field spacing {}",
                kernel.spacing(),
                h
            )));
        }
        if let Some(msg) = kernel.truncation_for(f) {
            return Err(Error::Truncation(msg));
        }
        let g = kernel.grid();
        let (gx, gy) = (g.nx(), g.ny());
        let half_x = ((gx - 1) / 2).min(f.nx() - 1);
        let half_y = ((gy - 1) / 2).min(f.ny() - 1);
        let (kx, ky) = (2 * half_x + 1, 2 * half_y + 1);
        let (ox, oy) = ((gx - 1) / 2 - half_x, (gy - 1) / 2 - half_y);

        let px = fast_len(f.nx() + kx - 1);
        let py = fast_len(f.ny() + ky - 1);
        let plan = Plan2d::new(px, py);

        let mut spectrum = vec![Complex::default(); px * py];
        let mut spectrum_reflected = vec![Complex::default(); px * py];
        for j in 0..ky {
            for i in 0..kx {
                let v = g.get(ox + i, oy + j);
                spectrum[j * px + i] = Complex::new(v, 0.0);
                spectrum_reflected[(ky - 1 - j) * px + (kx - 1 - i)] = Complex::new(v, 0.0);
            }
        }
        plan.run(&mut spectrum, false);
        plan.run(&mut spectrum_reflected, false);
        Ok(Convolver { nx: f.nx(), ny: f.ny(), spacing: h, cx: half_x, cy: half_y, plan, spectrum, spectrum_reflected })
    }

    fn run(&self, f: &ScalarField, spectrum: &[Complex<f64>]) -> Result<ScalarField> {
        if f.nx() != self.nx || f.ny() != self.ny || (f.spacing() - self.spacing).abs() > 1e-12 * self.spacing {
            return Err(Error::GridMismatch(format!(
                "convolver prepared for {}x{}, got {}x{}",
                self.nx,
                self.ny,
                f.nx(),
                f.ny()
            )));
        }
        let (px, py) = (self.plan.w, self.plan.h);
        let mut buf = vec![Complex::default(); px * py];
        for j in 0..self.ny {
            for i in 0..self.nx {
                buf[j * px + i] = Complex::new(f.get(i, j), 0.0);
            }
        }
        self.plan.run(&mut buf, false);
        for (b, s) in buf.iter_mut().zip(spectrum) {
            *b *= s;
        }
        self.plan.run(&mut buf, true);
        let scale = f.cell_area() / (px * py) as f64;
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(buf[(j + self.cy) * px + i + self.cx].re * scale);
            }
        }
        f.with_values(out)
    }

    /// `(f * k)` on `f`'s grid.
    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        self.run(f, &self.spectrum)
    }

    /// Transpose of [`Convolver::apply`] with respect to the cell-weighted
    /// inner product: convolution with the reflected kernel.
    pub fn apply_adjoint(&self, g: &ScalarField) -> Result<ScalarField> {
        self.run(g, &self.spectrum_reflected)
    }
}
