use puruspe::Jn;
use serde::{Deserialize, Serialize};

/// Samples `values[k] = f(k * dr)` of a radial function.
///
/// Evaluation between samples is cubic Hermite with centered slopes (zero
/// slope at the origin, as for any smooth radial function); beyond the last
/// sample the profile is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub dr: f64,
    pub values: Vec<f64>,
}

impl RadialProfile {
    pub fn from_fn(dr: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        RadialProfile { dr, values: (0..n).map(|k| f(k as f64 * dr)).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn radius(&self, k: usize) -> f64 {
        k as f64 * self.dr
    }

    /// Largest sampled radius.
    pub fn extent(&self) -> f64 {
        self.dr * (self.values.len().saturating_sub(1)) as f64
    }

    fn slope(&self, k: usize) -> f64 {
        let n = self.values.len();
        if k == 0 {
            0.0
        } else if k + 1 < n {
            (self.values[k + 1] - self.values[k - 1]) / (2.0 * self.dr)
        } else {
            (self.values[k] - self.values[k - 1]) / self.dr
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        let n = self.values.len();
        if n == 0 {
            return 0.0;
        }
        let t = r / self.dr;
        let k = t.floor() as usize;
        if k + 1 >= n {
            return if k + 1 == n && t == k as f64 { self.values[k] } else { 0.0 };
        }
        let u = t - k as f64;
        let (p0, p1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slope(k) * self.dr, self.slope(k + 1) * self.dr);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * p0 + (u3 - 2.0 * u2 + u) * m0 + (-2.0 * u3 + 3.0 * u2) * p1 + (u3 - u2) * m1
    }

    /// `2π ∫ r |f(r)| dr`, the L¹ norm of the radial function on the plane.
    pub fn plane_l1(&self) -> f64 {
        let w = trapezoid_weights(self.values.len(), self.dr);
        let end_fix = self.dr * self.dr / 12.0 * self.values.first().map_or(0.0, |v| v.abs());
        2.0 * std::f64::consts::PI
            * (end_fix + self.values.iter().enumerate().map(|(k, v)| w[k] * self.radius(k) * v.abs()).sum::<f64>())
    }
}

pub(crate) fn trapezoid_weights(n: usize, dx: f64) -> Vec<f64> {
    let mut w = vec![dx; n];
    if n > 0 {
        w[0] = 0.5 * dx;
        w[n - 1] = 0.5 * dx;
    }
    w
}

/// `out[j] = Σ_k w_k x_k^(order+1) J_order(y_j x_k) f(x_k)`, the common
/// shape of all the quadratures below.
fn bessel_quadrature(xs: &[f64], w: &[f64], f: &[f64], ys: &[f64], order: u32, power: i32) -> Vec<f64> {
    let weighted: Vec<(f64, f64)> = xs
        .iter()
        .zip(w)
        .zip(f)
        .filter(|(_, &fv)| fv != 0.0)
        .map(|((&x, &wk), &fv)| (x, wk * x.powi(power) * fv))
        .collect();
    // For `x J₀(y x) f(x)` starting at the origin the integrand has slope
    // f(0) there; the Euler–Maclaurin end correction restores fourth order.
    let end_fix = if order == 0 && power == 1 && xs.first() == Some(&0.0) && xs.len() > 1 {
        let dx = xs[1] - xs[0];
        dx * dx / 12.0 * f[0]
    } else {
        0.0
    };
    ys.iter().map(|&y| end_fix + weighted.iter().map(|&(x, c)| c * Jn(order, y * x)).sum::<f64>()).collect()
}

/// Radial Fourier transform of a radial function on the plane:
/// `f̂(ρ) = 2π ∫₀^∞ r J₀(ρ r) f(r) dr`, evaluated at `ρ = j * d_rho` for
/// `j < n` by trapezoidal quadrature over the samples.
///
/// With this convention the transform agrees with `∫ f(x) e^{-i ξ·x} dx` in
/// two dimensions, so `(2π)⁻¹ e^{-r²/2}` maps to `e^{-ρ²/2}`.
pub fn hankel0(p: &RadialProfile, d_rho: f64, n: usize) -> RadialProfile {
    let xs: Vec<f64> = (0..p.len()).map(|k| p.radius(k)).collect();
    let w = trapezoid_weights(p.len(), p.dr);
    let ys: Vec<f64> = (0..n).map(|j| j as f64 * d_rho).collect();
    let two_pi = 2.0 * std::f64::consts::PI;
    let values = bessel_quadrature(&xs, &w, &p.values, &ys, 0, 1).into_iter().map(|v| two_pi * v).collect();
    RadialProfile { dr: d_rho, values }
}

/// Inverse of [`hankel0`]: `f(r) = (2π)⁻¹ ∫₀^∞ ρ J₀(r ρ) f̂(ρ) dρ`.
pub fn inverse_hankel0(spectrum: &RadialProfile, dr: f64, n: usize) -> RadialProfile {
    inverse_on(spectrum, &(0..n).map(|k| k as f64 * dr).collect::<Vec<_>>(), dr, false)
}

/// Radial derivative of the inverse transform:
/// `f'(r) = -(2π)⁻¹ ∫₀^∞ ρ² J₁(r ρ) f̂(ρ) dρ`.
pub fn inverse_hankel0_derivative(spectrum: &RadialProfile, dr: f64, n: usize) -> RadialProfile {
    inverse_on(spectrum, &(0..n).map(|k| k as f64 * dr).collect::<Vec<_>>(), dr, true)
}

fn inverse_on(spectrum: &RadialProfile, rs: &[f64], dr: f64, derivative: bool) -> RadialProfile {
    let xs: Vec<f64> = (0..spectrum.len()).map(|k| spectrum.radius(k)).collect();
    let w = trapezoid_weights(spectrum.len(), spectrum.dr);
    let inv = 1.0 / (2.0 * std::f64::consts::PI);
    let values = if derivative {
        bessel_quadrature(&xs, &w, &spectrum.values, rs, 1, 2).into_iter().map(|v| -inv * v).collect()
    } else {
        bessel_quadrature(&xs, &w, &spectrum.values, rs, 0, 1).into_iter().map(|v| inv * v).collect()
    };
    RadialProfile { dr, values }
}

/// Inverse transform of a spectrum sampled on `[rho0, rho0 + (n-1) d_rho]`
/// (an annulus), at radii `k * dr`. Used for spectra that vanish outside a
/// band far from the origin.
pub(crate) fn inverse_band(
    rho0: f64,
    d_rho: f64,
    spectrum: &[f64],
    dr: f64,
    n: usize,
    derivative: bool,
) -> RadialProfile {
    let xs: Vec<f64> = (0..spectrum.len()).map(|k| rho0 + k as f64 * d_rho).collect();
    let w = trapezoid_weights(spectrum.len(), d_rho);
    let rs: Vec<f64> = (0..n).map(|k| k as f64 * dr).collect();
    let inv = 1.0 / (2.0 * std::f64::consts::PI);
    let values = if derivative {
        bessel_quadrature(&xs, &w, spectrum, &rs, 1, 2).into_iter().map(|v| -inv * v).collect()
    } else {
        bessel_quadrature(&xs, &w, spectrum, &rs, 0, 1).into_iter().map(|v| inv * v).collect()
    };
    RadialProfile { dr, values }
}
