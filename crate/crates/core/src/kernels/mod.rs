//! Optical kernels: the Gaussian `G`, `Jinc`, the smoothed point-spread
//! function `T` and the mutual intensity `J`, as radial functions and as
//! samples on a grid.
//!
//! Every kernel is a radial base function `f` together with a scale `s`; the
//! kernel is `f_s(x) = s⁻² f(x / s)`, whose spectrum is `f̂(s ξ)`.

mod cache;
mod hankel;
mod psf;

use std::f64::consts::PI;
use std::sync::Arc;

use puruspe::Jn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::ScalarField;

pub use cache::{load_cached_psf, params_hash, store_psf, PsfCacheHeader};
pub use hankel::{hankel0, inverse_hankel0, inverse_hankel0_derivative, RadialProfile};
pub use psf::{build_smoothed_psf, smoothed_psf_cached, PsfSearch, PsfTrial, SmoothedPsf};

/// Relative amplitude below which a decaying kernel counts as negligible.
pub const DECAY_TOLERANCE: f64 = 1e-8;
/// Absolute tail envelope accepted for the oscillatory Bessel kernels.
pub const OSCILLATORY_TOLERANCE: f64 = 1e-4;

fn sigma(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

fn sigma_prime(t: f64) -> f64 {
    if t > 0.0 {
        sigma(t) / (t * t)
    } else {
        0.0
    }
}

/// C^∞ cutoff: 1 on `(-∞, 0]`, 0 on `[1, ∞)`, nonincreasing in between.
pub fn smooth_step(t: f64) -> f64 {
    let (a, b) = (sigma(1.0 - t), sigma(t));
    a / (a + b)
}

/// C^∞ approximate Heaviside: 0 for `t ≤ -1/2`, 1 for `t ≥ 1/2`.
pub fn smooth_heaviside(t: f64) -> f64 {
    smooth_step(0.5 - t)
}

pub fn smooth_heaviside_derivative(t: f64) -> f64 {
    let (a, b) = (sigma(t + 0.5), sigma(0.5 - t));
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    (sigma_prime(t + 0.5) * b + a * sigma_prime(0.5 - t)) / ((a + b) * (a + b))
}

/// `2 J₁(r) / r`, equal to 1 at the origin.
pub fn airy(r: f64) -> f64 {
    if r.abs() < 1e-4 {
        1.0 - r * r / 8.0
    } else {
        2.0 * Jn(1, r) / r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Gaussian,
    Jinc,
    SmoothedPsf,
    MutualIntensity,
    Delta,
}

/// Parametric description of a kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Gaussian { s: f64 },
    Jinc { s: f64 },
    SmoothedPsf { s: f64, delta: f64 },
    MutualIntensity { k_sigma_na: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::Domain(format!("{what} must be positive and finite, got {v}")));
        match *self {
            KernelSpec::Gaussian { s } | KernelSpec::Jinc { s } if !(s > 0.0 && s.is_finite()) => bad("scale s", s),
            KernelSpec::SmoothedPsf { s, .. } if !(s > 0.0 && s.is_finite()) => bad("scale s", s),
            KernelSpec::SmoothedPsf { delta, .. } if !(delta > 0.0 && delta.is_finite()) => bad("deviation δ̃", delta),
            KernelSpec::MutualIntensity { k_sigma_na } if !(k_sigma_na > 0.0 && k_sigma_na.is_finite()) => {
                bad("kσNA", k_sigma_na)
            }
            _ => Ok(()),
        }
    }

    /// Samples the kernel at `spacing`, out to its support or `max_radius`,
    /// whichever is smaller.
    pub fn sample(&self, spacing: f64, max_radius: f64) -> Result<SampledKernel> {
        self.validate()?;
        match *self {
            KernelSpec::Gaussian { s } => {
                SampledKernel::build(KernelKind::Gaussian, Radial::Gaussian, s, spacing, 8.0 * s, max_radius)
            }
            KernelSpec::Jinc { s } => {
                SampledKernel::build(KernelKind::Jinc, Radial::Jinc, s, spacing, max_radius, max_radius)
            }
            KernelSpec::SmoothedPsf { s, delta } => {
                let psf = smoothed_psf_cached(delta, &PsfSearch::default())?;
                psf.kernel(s, spacing, max_radius)
            }
            KernelSpec::MutualIntensity { k_sigma_na } => mutual_intensity(k_sigma_na, spacing, max_radius),
        }
    }
}

/// Unit-scale radial base functions.
#[derive(Debug, Clone)]
pub(crate) enum Radial {
    Gaussian,
    Jinc,
    /// `2 J₁(c r) / (c r)`
    Mutual { c: f64 },
    /// `T̃`, the smoothed PSF in the units where its spectrum is 1 on `B₁`.
    Psf(Arc<SmoothedPsf>),
    Delta,
}

impl Radial {
    fn value(&self, r: f64) -> f64 {
        match self {
            Radial::Gaussian => (-r * r / 2.0).exp() / (2.0 * PI),
            Radial::Jinc => airy(r) / (4.0 * PI),
            Radial::Mutual { c } => airy(c * r),
            Radial::Psf(p) => p.t_tilde(r),
            Radial::Delta => 0.0,
        }
    }

    fn spectrum(&self, rho: f64) -> f64 {
        match self {
            Radial::Gaussian => (-rho * rho / 2.0).exp(),
            Radial::Jinc => {
                if rho < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Radial::Mutual { c } => {
                if rho < *c {
                    4.0 * PI / (c * c)
                } else {
                    0.0
                }
            }
            Radial::Psf(p) => p.t_tilde_hat(rho),
            Radial::Delta => 1.0,
        }
    }

    /// Upper bound on `|f(r')|` for `r' ≥ r`.
    fn envelope(&self, r: f64) -> f64 {
        // |J₁(x)| ≤ sqrt(2 / (π x)) for x > 0 (with margin)
        let j1_env = |x: f64| if x > 1.0 { (2.0 / (PI * x)).sqrt() } else { 1.0 };
        match self {
            Radial::Gaussian => (-r * r / 2.0).exp() / (2.0 * PI),
            Radial::Jinc => j1_env(r) / (2.0 * PI * r.max(1e-300)),
            Radial::Mutual { c } => 2.0 * j1_env(c * r) / (c * r).max(1e-300),
            Radial::Psf(p) => p.envelope(r),
            Radial::Delta => 0.0,
        }
    }

    /// Continuum `‖f‖_{L¹}` where finite.
    fn l1_norm(&self) -> Option<f64> {
        match self {
            Radial::Gaussian => Some(1.0),
            Radial::Psf(p) => Some(p.l1_norm()),
            Radial::Delta => Some(1.0),
            Radial::Jinc | Radial::Mutual { .. } => None,
        }
    }
}

/// A radial kernel and its samples on a centered grid.
#[derive(Debug, Clone)]
pub struct SampledKernel {
    kind: KernelKind,
    radial: Radial,
    scale: f64,
    /// Radius beyond which the kernel is negligible (physical units).
    support: f64,
    /// Radius actually sampled; at most `support`.
    sampled_radius: f64,
    decayed: bool,
    grid: ScalarField,
    mass: f64,
}

impl SampledKernel {
    fn build(kind: KernelKind, radial: Radial, scale: f64, spacing: f64, support: f64, sampled_radius: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Domain(format!("spacing must be positive, got {spacing}")));
        }
        let sampled_radius = sampled_radius.min(support);
        let m = ((sampled_radius / spacing) - 1e-9).ceil().max(1.0) as usize;
        let n = 2 * m + 1;
        let origin = [-(m as f64) * spacing; 2];
        let mut values = vec![0.0; n * n];
        if let Radial::Delta = radial {
            values[m * n + m] = 1.0 / (spacing * spacing);
        } else {
            let inv = 1.0 / (scale * scale);
            // symmetric fill keeps samples at equal radii bitwise identical
            for j in 0..=m {
                for i in j..=m {
                    let r = ((i * i + j * j) as f64).sqrt() * spacing;
                    let v = inv * radial.value(r / scale);
                    for (a, b) in [(i, j), (j, i)] {
                        for (x, y) in [(m + a, m + b), (m - a, m + b), (m + a, m - b), (m - a, m - b)] {
                            values[y * n + x] = v;
                        }
                    }
                }
            }
        }
        let grid = ScalarField::from_vec(n, n, spacing, origin, values)?;
        let mass = grid.integral();
        let decayed = radial.envelope(support / scale) <= kind_tolerance(kind, &radial);
        Ok(SampledKernel { kind, radial, scale, support, sampled_radius: m as f64 * spacing, decayed, grid, mass })
    }

    /// Discrete delta: a single cell of mass 1.
    pub fn delta(spacing: f64) -> Self {
        Self::build(KernelKind::Delta, Radial::Delta, 1.0, spacing, spacing, spacing).expect("positive spacing")
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }

    pub fn grid(&self) -> &ScalarField {
        &self.grid
    }

    /// `Σ k h²` over the sampled grid.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `Σ |k| h²` over the sampled grid.
    pub fn grid_l1(&self) -> f64 {
        self.grid.l1_norm()
    }

    /// Continuum L¹ norm (scale invariant), when the kernel is integrable.
    pub fn l1_norm(&self) -> Option<f64> {
        self.radial.l1_norm()
    }

    pub fn support_radius(&self) -> f64 {
        self.support
    }

    pub fn sampled_radius(&self) -> f64 {
        self.sampled_radius
    }

    /// Whether the kernel has decayed to its tolerance at `support_radius`.
    pub fn is_decayed(&self) -> bool {
        self.decayed
    }

    /// Kernel value at distance `r` from the origin.
    pub fn value_at(&self, r: f64) -> f64 {
        if let Radial::Delta = self.radial {
            return if r == 0.0 { 1.0 / (self.spacing() * self.spacing()) } else { 0.0 };
        }
        self.radial.value(r / self.scale) / (self.scale * self.scale)
    }

    /// Continuum spectrum at frequency magnitude `rho`.
    pub fn spectrum_at(&self, rho: f64) -> f64 {
        self.radial.spectrum(self.scale * rho)
    }

    /// Radial profile samples `k * dr`, `k < n`.
    pub fn radial_profile(&self, dr: f64, n: usize) -> RadialProfile {
        RadialProfile::from_fn(dr, n, |r| self.value_at(r))
    }

    /// Fourier-side profile at `n` frequencies up to the grid Nyquist limit.
    pub fn spectrum_profile(&self, n: usize) -> RadialProfile {
        let d = PI / self.spacing() / (n.max(2) - 1) as f64;
        RadialProfile::from_fn(d, n, |rho| self.spectrum_at(rho))
    }

    /// Resamples with the grid limited to `max_radius`.
    pub fn with_max_radius(self, max_radius: f64) -> Self {
        if max_radius >= self.sampled_radius {
            return self;
        }
        let spacing = self.spacing();
        Self::build(self.kind, self.radial, self.scale, spacing, self.support, max_radius)
            .expect("existing kernel parameters are valid")
    }

    /// Reports why convolving a field shaped like `f` with this kernel
    /// would lose kernel mass: the sampled grid stops before both the
    /// kernel's support and the field's extent.
    pub fn truncation_for(&self, f: &ScalarField) -> Option<String> {
        let extent = (f.nx().max(f.ny()) - 1) as f64 * f.spacing();
        let needed = if self.decayed { self.support.min(extent) } else { extent };
        if self.sampled_radius < needed - 0.5 * f.spacing() {
            Some(format!(
                "{:?} kernel sampled to radius {:.4}, field extent {:.4} needs {:.4}{}",
                self.kind,
                self.sampled_radius,
                extent,
                needed,
                if self.decayed { "" } else { " (kernel has not decayed)" }
            ))
        } else {
            None
        }
    }
}

fn kind_tolerance(kind: KernelKind, radial: &Radial) -> f64 {
    match kind {
        KernelKind::Jinc | KernelKind::MutualIntensity => OSCILLATORY_TOLERANCE,
        _ => DECAY_TOLERANCE * radial.value(0.0).abs().max(f64::MIN_POSITIVE),
    }
}

/// Unit Gaussian `G(x) = (2π)⁻¹ e^{-|x|²/2}` sampled at `spacing` out to
/// `support` standard deviations.
pub fn gaussian(spacing: f64, support: f64) -> Result<SampledKernel> {
    if support < 8.0 {
        return Err(Error::Truncation(format!("Gaussian support {support} is below 8 standard deviations")));
    }
    SampledKernel::build(KernelKind::Gaussian, Radial::Gaussian, 1.0, spacing, support, support)
}

/// `Jinc(x) = J₁(|x|) / (2π |x|)` sampled at `spacing` out to radius
/// `support`. The tail decays only like `|x|^{-3/2}`; a support whose
/// envelope exceeds `1e-4` is recorded as not decayed.
pub fn jinc(spacing: f64, support: f64) -> Result<SampledKernel> {
    if !(support > 0.0) {
        return Err(Error::Domain(format!("support must be positive, got {support}")));
    }
    SampledKernel::build(KernelKind::Jinc, Radial::Jinc, 1.0, spacing, support, support)
}

/// Mutual intensity `J(x) = 2 J₁(c|x|) / (c|x|)` with `c = kσNA`, sampled
/// out to radius `support`.
pub fn mutual_intensity(k_sigma_na: f64, spacing: f64, support: f64) -> Result<SampledKernel> {
    if !(k_sigma_na > 0.0 && k_sigma_na.is_finite()) {
        return Err(Error::Domain(format!("kσNA must be positive, got {k_sigma_na}")));
    }
    SampledKernel::build(
        KernelKind::MutualIntensity,
        Radial::Mutual { c: k_sigma_na },
        1.0,
        spacing,
        support,
        support,
    )
}

/// `f_s(x) = s⁻² f(x / s)` on the same spacing, resampled from the radial
/// function; the support scales with `s`.
pub fn rescale_kernel(f: &SampledKernel, s: f64) -> Result<SampledKernel> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("rescale factor must be positive, got {s}")));
    }
    if s == 1.0 {
        return Ok(f.clone());
    }
    if let Radial::Delta = f.radial {
        return Err(Error::Domain("the discrete delta cannot be rescaled".into()));
    }
    SampledKernel::build(f.kind, f.radial.clone(), f.scale * s, f.spacing(), f.support * s, f.sampled_radius * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dft_at(k: &SampledKernel, xi: [f64; 2]) -> f64 {
        // kernels are even, so the transform is real
        let g = k.grid();
        let mut acc = 0.0;
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                let [x, y] = g.position(i, j);
                acc += g.get(i, j) * (xi[0] * x + xi[1] * y).cos();
            }
        }
        acc * g.cell_area()
    }

    #[test]
    fn smooth_step_shape() {
        assert_eq!(smooth_step(-0.3), 1.0);
        assert_eq!(smooth_step(0.0), 1.0);
        assert_eq!(smooth_step(1.0), 0.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for k in 0..=100 {
            let v = smooth_step(k as f64 / 100.0);
            assert!(v <= prev);
            prev = v;
        }
        assert_eq!(smooth_heaviside(-0.5), 0.0);
        assert_eq!(smooth_heaviside(0.5), 1.0);
        for t in [-0.4, -0.1, 0.0, 0.2, 0.45] {
            let fd = (smooth_heaviside(t + 1e-6) - smooth_heaviside(t - 1e-6)) / 2e-6;
            assert!((smooth_heaviside_derivative(t) - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn gaussian_values_mass_and_spectrum() {
        let g = gaussian(0.1, 8.0).unwrap();
        assert!((g.value_at(0.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let m = g.grid().nx() / 2;
        assert_eq!(g.grid().get(m, m), 1.0 / (2.0 * PI));
        assert!((g.mass() - 1.0).abs() < 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let xi = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let exact = (-(xi[0] * xi[0] + xi[1] * xi[1]) / 2.0f64).exp();
            assert!((dft_at(&g, xi) - exact).abs() < 1e-4);
        }
        assert!(matches!(gaussian(0.1, 6.0), Err(Error::Truncation(_))));
    }

    #[test]
    fn rescale_preserves_mass_and_scales_spectrum() {
        let g = gaussian(0.05, 8.0).unwrap();
        assert_eq!(rescale_kernel(&g, 1.0).unwrap().grid(), g.grid());
        for s in [0.3, 0.7, 2.0] {
            let gs = rescale_kernel(&g, s).unwrap();
            assert!((gs.mass() - g.mass()).abs() <= 1e-6 * g.mass(), "s = {s}");
            for xi in [[0.5, 0.0], [1.0, 1.0], [0.0, 2.5]] {
                let r2 = xi[0] * xi[0] + xi[1] * xi[1];
                assert!((dft_at(&gs, xi) - (-s * s * r2 / 2.0f64).exp()).abs() < 1e-4);
            }
        }
        assert!(matches!(rescale_kernel(&g, 0.0), Err(Error::Domain(_))));
        assert!(matches!(rescale_kernel(&g, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn jinc_center_and_scaled_center() {
        let j = jinc(0.5, 20.0).unwrap();
        assert!((j.value_at(0.0) - 1.0 / (4.0 * PI)).abs() < 1e-15);
        // J₁(r)/r → 1/2 from the series J₁(r) = r/2 - r³/16 + …
        let r: f64 = 1e-3;
        let series = (r / 2.0 - r.powi(3) / 16.0) / (2.0 * PI * r);
        assert!((j.value_at(r) - series).abs() < 1e-12);
        let (k, na) = (7.0, 0.6);
        let s = 1.0 / (k * na);
        let ks = rescale_kernel(&j, s).unwrap();
        assert!((ks.value_at(0.0) - (k * na) * (k * na) / (4.0 * PI)).abs() < 1e-12);
        assert!(!j.is_decayed());
    }

    #[test]
    fn mutual_intensity_bounded_and_converging() {
        let j = mutual_intensity(2.0, 0.1, 5.0).unwrap();
        assert_eq!(j.value_at(0.0), 1.0);
        assert!(j.grid().values().iter().all(|v| v.abs() <= 1.0 + 1e-12));
        let gap = |c: f64| {
            let j = mutual_intensity(c, 0.05, 2.0).unwrap();
            j.grid()
                .values()
                .iter()
                .enumerate()
                .filter(|(k, _)| {
                    let [x, y] = j.grid().position_of(*k);
                    x.hypot(y) <= 2.0
                })
                .map(|(_, v)| (v - 1.0).abs())
                .fold(0.0, f64::max)
        };
        let (a, b, c) = (gap(1.0), gap(0.5), gap(0.25));
        assert!(a > b && b > c, "{a} {b} {c}");
    }

    #[test]
    fn all_kinds_are_radially_symmetric() {
        let kernels = [
            gaussian(0.1, 8.0).unwrap(),
            jinc(0.3, 15.0).unwrap(),
            mutual_intensity(1.3, 0.1, 3.0).unwrap(),
        ];
        for k in &kernels {
            let g = k.grid();
            let m = g.nx() / 2;
            // (3,4) and (5,0) and (0,5) and (4,-3) all sit at radius 5 h
            let v = g.get(m + 3, m + 4);
            for (i, j) in [(m + 5, m), (m, m - 5), (m + 4, m - 3), (m - 4, m + 3)] {
                assert!((g.get(i, j) - v).abs() <= 1e-9 * v.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn truncation_is_flagged_only_when_mass_is_lost() {
        let field = ScalarField::centered(64, 0.1).unwrap();
        let g = rescale_kernel(&gaussian(0.1, 8.0).unwrap(), 0.5).unwrap();
        assert!(g.truncation_for(&field).is_none());
        let j = jinc(0.1, 2.0).unwrap();
        assert!(j.truncation_for(&field).is_some());
        let big = jinc(0.1, 7.0).unwrap();
        assert!(big.truncation_for(&field).is_none(), "covers the whole field extent");
    }
}
