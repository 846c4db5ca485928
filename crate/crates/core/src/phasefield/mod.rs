//! Double-well potential, the Modica–Mortola functional and its sharp
//! interface limit.
//!
//! The discrete functional uses forward differences with `u = 0` beyond the
//! window:
//!
//! ```text
//! P_ε(u) = c_p/(p' ε) Σ W(u) h² + c_p ε^{p-1}/p Σ |∇⁺u|^p h²
//! ```
//!
//! Central differences would leave the checkerboard mode with zero gradient
//! energy, and a binary checkerboard has zero well energy too.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::fields::{BinaryPattern, ScalarField};

/// Double-well potential with zeros exactly at 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "well", rename_all = "snake_case")]
pub enum DoubleWell {
    /// `9 t² (t − 1)²`.
    Standard,
    /// `scale · 9 t² (t − 1)²`.
    Scaled { scale: f64 },
}

impl Default for DoubleWell {
    fn default() -> Self {
        DoubleWell::Standard
    }
}

impl DoubleWell {
    fn scale(self) -> f64 {
        match self {
            DoubleWell::Standard => 1.0,
            DoubleWell::Scaled { scale } => scale,
        }
    }

    pub fn value(self, t: f64) -> f64 {
        let a = t * (t - 1.0);
        9.0 * self.scale() * a * a
    }

    pub fn derivative(self, t: f64) -> f64 {
        18.0 * self.scale() * t * (t - 1.0) * (2.0 * t - 1.0)
    }

    pub fn validate(self) -> Result<()> {
        let s = self.scale();
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Config(format!("double-well scale must be positive and finite, got {s}")));
        }
        Ok(())
    }
}

/// The default well `9 t² (t − 1)²`.
pub fn double_well(t: f64) -> f64 {
    DoubleWell::Standard.value(t)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive_simpson(&f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Hölder conjugate `p' = p / (p − 1)`.
pub fn conjugate_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `c_p = (∫₀¹ W^{1/p'})⁻¹`.
pub fn compute_cp(well: DoubleWell, p: f64) -> Result<f64> {
    well.validate()?;
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Config(format!("exponent p must lie in (1, inf), got {p}")));
    }
    let e = 1.0 / conjugate_exponent(p);
    let integral = integrate(|t| well.value(t).powf(e), 0.0, 1.0, 1e-13);
    if integral < 1e-12 {
        return Err(Error::Domain(format!("degenerate double well: integral {integral:e}")));
    }
    Ok(1.0 / integral)
}

/// The convex region 𝒟 on which a phase field may be nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "region", rename_all = "snake_case")]
pub enum Region {
    /// The disk inscribed in the computational window.
    #[default]
    Inscribed,
    Disk { center: [f64; 2], radius: f64 },
    Rect { center: [f64; 2], half: [f64; 2] },
}

impl Region {
    fn resolve(self, grid: &ScalarField) -> Region {
        match self {
            Region::Inscribed => {
                let h = grid.spacing();
                let o = grid.origin();
                let (wx, wy) = (grid.nx() as f64 * h, grid.ny() as f64 * h);
                let center = [o[0] - 0.5 * h + 0.5 * wx, o[1] - 0.5 * h + 0.5 * wy];
                Region::Disk { center, radius: 0.5 * wx.min(wy) }
            }
            other => other,
        }
    }

    pub fn validate(self) -> Result<()> {
        match self {
            Region::Disk { radius, .. } if !(radius > 0.0) => {
                Err(Error::Config(format!("region radius must be positive, got {radius}")))
            }
            Region::Rect { half, .. } if !(half[0] > 0.0 && half[1] > 0.0) => {
                Err(Error::Config(format!("region half-widths must be positive, got {half:?}")))
            }
            _ => Ok(()),
        }
    }

    pub fn contains(self, grid: &ScalarField, p: [f64; 2]) -> bool {
        match self.resolve(grid) {
            Region::Disk { center, radius } => (p[0] - center[0]).hypot(p[1] - center[1]) < radius,
            Region::Rect { center, half } => (p[0] - center[0]).abs() < half[0] && (p[1] - center[1]).abs() < half[1],
            Region::Inscribed => unreachable!(),
        }
    }

    /// Indicator of the cells whose centers lie in 𝒟.
    pub fn closure_mask(self, grid: &ScalarField) -> ScalarField {
        let mut out = grid.zeros_like();
        for k in 0..out.len() {
            if self.contains(grid, grid.position_of(k)) {
                out.values_mut()[k] = 1.0;
            }
        }
        out
    }

    /// Cells of 𝒟 minus a one-cell collar: those whose 4-neighbours all lie
    /// in 𝒟 and inside the window. This is where `u` may be nonzero.
    pub fn interior_mask(self, grid: &ScalarField) -> ScalarField {
        let inside = self.closure_mask(grid);
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut out = grid.zeros_like();
        for j in 1..ny.saturating_sub(1) {
            for i in 1..nx.saturating_sub(1) {
                let ok = inside.get(i, j) == 1.0
                    && inside.get(i - 1, j) == 1.0
                    && inside.get(i + 1, j) == 1.0
                    && inside.get(i, j - 1) == 1.0
                    && inside.get(i, j + 1) == 1.0;
                if ok {
                    out.set(i, j, 1.0);
                }
            }
        }
        out
    }
}

/// Well, exponent, normalization and region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoubleWellSpec {
    pub well: DoubleWell,
    pub p: f64,
    pub cp: f64,
    pub region: Region,
}

impl DoubleWellSpec {
    pub fn new(well: DoubleWell, p: f64, region: Region) -> Result<Self> {
        region.validate()?;
        let cp = compute_cp(well, p)?;
        Ok(DoubleWellSpec { well, p, cp, region })
    }

    /// Standard well, `p = 2`, `c_p = 2`, given region.
    pub fn standard(region: Region) -> Self {
        Self::new(DoubleWell::Standard, 2.0, region).expect("standard well is valid")
    }

    /// Weights of the well and gradient terms, `(c_p/(p'ε), c_p ε^{p-1}/p)`.
    pub fn weights(&self, eps: f64) -> (f64, f64) {
        (self.cp / (conjugate_exponent(self.p) * eps), self.cp * eps.powf(self.p - 1.0) / self.p)
    }
}

impl Default for DoubleWellSpec {
    fn default() -> Self {
        Self::standard(Region::Inscribed)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("epsilon must be positive, got {eps}")))
    }
}

/// Forward differences with zero extension beyond the window.
pub fn forward_gradient(u: &ScalarField) -> (Vec<f64>, Vec<f64>) {
    let (nx, ny) = (u.nx(), u.ny());
    let inv_h = 1.0 / u.spacing();
    let v = u.values();
    let mut gx = vec![0.0; nx * ny];
    let mut gy = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let right = if i + 1 < nx { v[k + 1] } else { 0.0 };
            let up = if j + 1 < ny { v[k + nx] } else { 0.0 };
            gx[k] = (right - v[k]) * inv_h;
            gy[k] = (up - v[k]) * inv_h;
        }
    }
    (gx, gy)
}

/// Whether `u` vanishes off the interior of 𝒟.
pub fn supported_in(u: &ScalarField, allowed: &ScalarField) -> bool {
    u.values().iter().zip(allowed.values()).all(|(&x, &a)| a == 1.0 || x == 0.0)
}

/// The two terms of `P_ε(u)` separately, `(well, gradient)`, without the
/// support check.
pub fn modica_mortola_terms(u: &ScalarField, eps: f64, spec: &DoubleWellSpec) -> Result<(f64, f64)> {
    check_eps(eps)?;
    let (cw, cg) = spec.weights(eps);
    let area = u.cell_area();
    let well: f64 = u.values().iter().map(|&t| spec.well.value(t)).sum::<f64>() * area;
    let (gx, gy) = forward_gradient(u);
    let half_p = 0.5 * spec.p;
    let grad: f64 = gx.iter().zip(&gy).map(|(a, b)| (a * a + b * b).powf(half_p)).sum::<f64>() * area;
    Ok((cw * well, cg * grad))
}

/// `P_ε(u)`, or `+inf` if `u` is nonzero off the interior of 𝒟.
pub fn modica_mortola(u: &ScalarField, eps: f64, spec: &DoubleWellSpec) -> Result<ExtReal> {
    check_eps(eps)?;
    if !supported_in(u, &spec.region.interior_mask(u)) {
        return Ok(ExtReal::Infinite);
    }
    let (a, b) = modica_mortola_terms(u, eps, spec)?;
    Ok(ExtReal::Finite(a + b))
}

/// L² gradient of the finite branch of `P_ε`: the derivative of the discrete
/// sum divided by the cell area.
pub fn modica_mortola_gradient(u: &ScalarField, eps: f64, spec: &DoubleWellSpec) -> Result<ScalarField> {
    check_eps(eps)?;
    let (cw, cg) = spec.weights(eps);
    let (nx, ny) = (u.nx(), u.ny());
    let h = u.spacing();
    let (gx, gy) = forward_gradient(u);
    let p = spec.p;
    // w = p |g|^{p-2} g
    let scale: Vec<f64> = gx
        .iter()
        .zip(&gy)
        .map(|(a, b)| {
            let n2 = a * a + b * b;
            if p == 2.0 {
                2.0
            } else if n2 == 0.0 {
                0.0
            } else {
                p * n2.powf(0.5 * p - 1.0)
            }
        })
        .collect();
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let mut div = -(scale[k] * gx[k]) - scale[k] * gy[k];
            if i > 0 {
                div += scale[k - 1] * gx[k - 1];
            }
            if j > 0 {
                div += scale[k - nx] * gy[k - nx];
            }
            out[k] = cw * spec.well.derivative(u.values()[k]) + cg * div / h;
        }
    }
    u.with_values(out)
}

/// Sharp-interface limit: the perimeter of `{u = 1}` if `u` is binary
/// (within 1e-9) and vanishes outside 𝒟, otherwise `+inf`.
pub fn limit_perimeter(u: &ScalarField, spec: &DoubleWellSpec) -> ExtReal {
    let binary = u.values().iter().all(|&t| t.abs() <= 1e-9 || (t - 1.0).abs() <= 1e-9);
    if !binary {
        return ExtReal::Infinite;
    }
    let bitmap = u.map(|t| if t > 0.5 { 1.0 } else { 0.0 });
    if !supported_in(&bitmap, &spec.region.closure_mask(u)) {
        return ExtReal::Infinite;
    }
    let pattern = BinaryPattern::from_bitmap(&bitmap).expect("binary by construction");
    ExtReal::Finite(crate::geometry::perimeter(&pattern))
}

/// `q(x) = 1 / (1 + e^{-3x/ε})`, the optimal transition profile of the
/// standard well: `ε q' = 3 q (1 − q) = √W(q)`.
pub fn profile(x: f64, eps: f64) -> f64 {
    let z = -3.0 * x / eps;
    if z > 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

pub fn profile_derivative(x: f64, eps: f64) -> f64 {
    let q = profile(x, eps);
    3.0 / eps * q * (1.0 - q)
}

/// Samples of `q` on `[-length/2, length/2]` at the given spacing.
pub fn optimal_profile(eps: f64, length: f64, spacing: f64) -> Result<Vec<f64>> {
    check_eps(eps)?;
    if !(spacing > 0.0 && length >= 0.0) {
        return Err(Error::Domain(format!("bad profile sampling: length {length}, spacing {spacing}")));
    }
    let n = (length / spacing).floor() as usize + 1;
    let x0 = -0.5 * (n - 1) as f64 * spacing;
    Ok((0..n).map(|k| profile(x0 + k as f64 * spacing, eps)).collect())
}

/// `q(d)` applied to a signed distance field (positive inside): the
/// mollified indicator of the zero superlevel set.
pub fn mollify(sdf: &ScalarField, eps: f64) -> ScalarField {
    sdf.map(|d| profile(d, eps))
}
