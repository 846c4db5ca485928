//! The smoothed point-spread function.
//!
//! In its natural units the kernel `T̃` has spectrum
//!
//! ```text
//! T̃^(ρ) = φ(ρ-1) + (1 - φ(ρ-1)) e^{-s₀²ρ²/2} φ(ρ-b),   b = b₀ / s₀,
//! ```
//!
//! which is 1 on the unit disk, follows the Gaussian `Ĝ_{s₀}` between radius
//! 2 and `b`, and is cut off smoothly on `[b, b+1]`. The kernel `T` with
//! `T̂ ≡ 1` on `B_{s₀}` is `T̃` rescaled by `1/s₀`; the imaging PSF is
//! `K = T̃_s`.
//!
//! `T̃ = G_{s₀} + D` where `D` splits into a low-frequency part with spectrum
//! `φ(ρ-1)(1 - e^{-s₀²ρ²/2})` on `[0, 2]` and a high band on `[b, b+1]`.
//! Both are inverse transformed by Hankel quadrature and their `W^{1,1}` norms
//! summed, which bounds `‖T̃ - G_{s₀}‖_{W^{1,1}}` and hence also
//! `‖T - G‖_{W^{1,1}} = ‖D‖_{L¹} + s₀ ‖∇D‖_{L¹}`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::hankel::{inverse_band, inverse_hankel0, inverse_hankel0_derivative, trapezoid_weights, RadialProfile};
use super::{smooth_step, KernelKind, Radial, SampledKernel, DECAY_TOLERANCE};
use crate::error::{Error, Result};

const LOW_D_RHO: f64 = 0.002;
const LOW_DR: f64 = 0.02;
const LOW_R_MAX: f64 = 80.0;
const TAIL_R_MAX: f64 = 16.0;
/// Band amplitudes below this are dropped from the table and the bound.
const TAIL_NEGLIGIBLE: f64 = 1e-13;

/// Parameter budget for the `(s₀, b₀)` search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsfSearch {
    /// `s₀` runs through `1, 1/2, …, 2^{-max_halvings}`.
    pub max_halvings: u32,
    pub b0_values: Vec<f64>,
}

impl Default for PsfSearch {
    fn default() -> Self {
        PsfSearch { max_halvings: 8, b0_values: vec![2.0, 4.0, 8.0, 16.0] }
    }
}

/// One evaluated `(s₀, b₀)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsfTrial {
    pub s0: f64,
    pub b0: f64,
    /// `sup |D̂|`, a lower bound for `‖D‖_{L¹}`.
    pub lower_bound: f64,
    /// Computed `W^{1,1}` bound, absent when the lower bound already failed.
    pub deviation: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SmoothedPsf {
    pub(super) target: f64,
    pub(super) s0: f64,
    pub(super) b0: f64,
    pub(super) deviation_l1: f64,
    pub(super) deviation_grad: f64,
    pub(super) low: RadialProfile,
    pub(super) tail: Option<RadialProfile>,
    pub(super) l1: f64,
    pub(super) support: f64,
    pub(super) trials: Vec<PsfTrial>,
}

fn gaussian_s0(s0: f64, r: f64) -> f64 {
    (-r * r / (2.0 * s0 * s0)).exp() / (2.0 * PI * s0 * s0)
}

fn low_spectrum(s0: f64, rho: f64) -> f64 {
    smooth_step(rho - 1.0) * (1.0 - (-s0 * s0 * rho * rho / 2.0).exp())
}

fn band_spectrum(s0: f64, b: f64, rho: f64) -> f64 {
    -(-s0 * s0 * rho * rho / 2.0).exp() * (1.0 - smooth_step(rho - b))
}

fn plane_norms(value: &RadialProfile, derivative: &RadialProfile) -> (f64, f64) {
    let w = trapezoid_weights(value.len(), value.dr);
    let l1 = value.plane_l1();
    let gr = 2.0 * PI * (0..value.len()).map(|k| w[k] * value.radius(k) * derivative.values[k].abs()).sum::<f64>();
    (l1, gr)
}

struct LowPart {
    profile: RadialProfile,
    l1: f64,
    grad: f64,
}

fn low_part(s0: f64) -> LowPart {
    let n_rho = (2.0 / LOW_D_RHO).round() as usize + 1;
    let spec = RadialProfile::from_fn(LOW_D_RHO, n_rho, |rho| low_spectrum(s0, rho));
    let n_r = (LOW_R_MAX / LOW_DR).round() as usize + 1;
    let profile = inverse_hankel0(&spec, LOW_DR, n_r);
    let deriv = inverse_hankel0_derivative(&spec, LOW_DR, n_r);
    let (l1, grad) = plane_norms(&profile, &deriv);
    LowPart { profile, l1, grad }
}

fn band_part(s0: f64, b: f64) -> (RadialProfile, f64, f64) {
    let n_rho = (1.0 / LOW_D_RHO).round() as usize + 1;
    let spec: Vec<f64> = (0..n_rho).map(|k| band_spectrum(s0, b, b + k as f64 * LOW_D_RHO)).collect();
    let dr = 2.0 * PI / (24.0 * (b + 1.0));
    let n_r = (TAIL_R_MAX / dr).ceil() as usize + 1;
    let profile = inverse_band(b, LOW_D_RHO, &spec, dr, n_r, false);
    let deriv = inverse_band(b, LOW_D_RHO, &spec, dr, n_r, true);
    let (l1, grad) = plane_norms(&profile, &deriv);
    (profile, l1, grad)
}

/// `sup |D̂|` sampled on `[0, 2]` and on the band, plus the band amplitude.
fn spectral_deviation(s0: f64, b: f64) -> (f64, f64) {
    let n = (2.0 / LOW_D_RHO).round() as usize;
    let low = (0..=n).map(|k| low_spectrum(s0, k as f64 * LOW_D_RHO).abs()).fold(0.0, f64::max);
    let m = (1.0 / LOW_D_RHO).round() as usize;
    let band = (0..=m).map(|k| band_spectrum(s0, b, b + k as f64 * LOW_D_RHO).abs()).fold(0.0, f64::max);
    (low.max(band), band)
}

/// Searches `s₀ ∈ {1, 1/2, …}` (outer, decreasing) and `b₀` (inner,
/// increasing) for the first pair whose computed deviation
/// `‖T̃ - G_{s₀}‖_{W^{1,1}}` is at most `delta`.
pub fn build_smoothed_psf(delta: f64, search: &PsfSearch) -> Result<SmoothedPsf> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!("target deviation must be positive, got {delta}")));
    }
    if search.b0_values.iter().any(|&b0| !(b0 >= 2.0)) {
        return Err(Error::Domain("every b₀ must be at least 2".into()));
    }
    let mut trials = Vec::new();
    let mut best_computed = f64::INFINITY;
    let mut best_bound = f64::INFINITY;
    for halving in 0..=search.max_halvings {
        let s0 = 0.5f64.powi(halving as i32);
        let mut low: Option<LowPart> = None;
        for &b0 in &search.b0_values {
            let b = b0 / s0;
            let (lower_bound, band_amp) = spectral_deviation(s0, b);
            best_bound = best_bound.min(lower_bound);
            if lower_bound > delta {
                trials.push(PsfTrial { s0, b0, lower_bound, deviation: None });
                continue;
            }
            let lp = low.get_or_insert_with(|| low_part(s0));
            let tail = (band_amp > TAIL_NEGLIGIBLE).then(|| band_part(s0, b));
            let (tl1, tgrad) = tail.as_ref().map_or((0.0, 0.0), |t| (t.1, t.2));
            let deviation = lp.l1 + lp.grad + tl1 + tgrad;
            best_computed = best_computed.min(deviation);
            trials.push(PsfTrial { s0, b0, lower_bound, deviation: Some(deviation) });
            if deviation <= delta {
                return Ok(SmoothedPsf::assemble(
                    delta,
                    s0,
                    b0,
                    lp.l1 + tl1,
                    lp.grad + tgrad,
                    lp.profile.clone(),
                    tail.map(|t| t.0),
                    trials,
                ));
            }
        }
    }
    let best_deviation = if best_computed.is_finite() { best_computed } else { best_bound };
    Err(Error::ConstructionFailed { best_deviation, target: delta })
}

/// [`build_smoothed_psf`] with the default cutoff, memoized per process.
pub fn smoothed_psf_cached(delta: f64, search: &PsfSearch) -> Result<Arc<SmoothedPsf>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<SmoothedPsf>>>> = OnceLock::new();
    let key = format!("{:x}:{:?}", delta.to_bits(), search);
    let cache = CACHE.get_or_init(Default::default);
    if let Some(p) = cache.lock().expect("psf cache poisoned").get(&key) {
        return Ok(p.clone());
    }
    let psf = Arc::new(build_smoothed_psf(delta, search)?);
    cache.lock().expect("psf cache poisoned").insert(key, psf.clone());
    Ok(psf)
}

impl SmoothedPsf {
    #[allow(clippy::too_many_arguments)]
    pub(super) fn assemble(
        target: f64,
        s0: f64,
        b0: f64,
        deviation_l1: f64,
        deviation_grad: f64,
        low: RadialProfile,
        tail: Option<RadialProfile>,
        trials: Vec<PsfTrial>,
    ) -> Self {
        let mut psf = SmoothedPsf {
            target,
            s0,
            b0,
            deviation_l1,
            deviation_grad,
            low,
            tail,
            l1: 0.0,
            support: 0.0,
            trials,
        };
        let extent = psf.low.extent().max(psf.tail.as_ref().map_or(0.0, |t| t.extent()));
        let dr = LOW_DR.min(s0 / 16.0).min(psf.tail.as_ref().map_or(f64::INFINITY, |t| t.dr));
        let n = (extent / dr).ceil() as usize + 1;
        let samples = RadialProfile::from_fn(dr, n, |r| psf.t_tilde(r));
        psf.l1 = samples.plane_l1();
        // support: last radius where the kernel is above tolerance
        let tol = DECAY_TOLERANCE * psf.t_tilde(0.0).abs();
        let last = samples.values.iter().rposition(|v| v.abs() > tol).unwrap_or(0);
        psf.support = ((last + 1) as f64 * dr).min(extent);
        psf
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    /// Outer spectral cutoff radius `b = b₀ / s₀` of `T̃`.
    pub fn b(&self) -> f64 {
        self.b0 / self.s0
    }

    /// Bound on `‖T̃ - G_{s₀}‖_{W^{1,1}}`, the quantity compared with the
    /// target.
    pub fn deviation(&self) -> f64 {
        self.deviation_l1 + self.deviation_grad
    }

    /// Bound on `‖T - G‖_{W^{1,1}} = ‖D‖_{L¹} + s₀‖∇D‖_{L¹}`.
    pub fn unit_deviation(&self) -> f64 {
        self.deviation_l1 + self.s0 * self.deviation_grad
    }

    pub fn deviation_parts(&self) -> (f64, f64) {
        (self.deviation_l1, self.deviation_grad)
    }

    pub fn trials(&self) -> &[PsfTrial] {
        &self.trials
    }

    /// `‖T‖_{L¹}`, invariant under rescaling.
    pub fn l1_norm(&self) -> f64 {
        self.l1
    }

    /// Radius (in `T̃` units) beyond which `|T̃|` stays below tolerance.
    pub fn support(&self) -> f64 {
        self.support
    }

    /// The tabulated deviation `D` (low band only), in `T̃` units.
    pub fn deviation_profile(&self) -> &RadialProfile {
        &self.low
    }

    pub fn band_profile(&self) -> Option<&RadialProfile> {
        self.tail.as_ref()
    }

    /// `T̃(r)`.
    pub fn t_tilde(&self, r: f64) -> f64 {
        gaussian_s0(self.s0, r) + self.low.eval(r) + self.tail.as_ref().map_or(0.0, |t| t.eval(r))
    }

    /// Spectrum of `T̃` at `ρ`.
    pub fn t_tilde_hat(&self, rho: f64) -> f64 {
        let inner = smooth_step(rho - 1.0);
        inner + (1.0 - inner) * (-self.s0 * self.s0 * rho * rho / 2.0).exp() * smooth_step(rho - self.b())
    }

    pub(super) fn envelope(&self, r: f64) -> f64 {
        let tail_max = |p: &RadialProfile| {
            let k0 = (r / p.dr).floor() as usize;
            p.values.iter().skip(k0).fold(0.0f64, |m, v| m.max(v.abs()))
        };
        gaussian_s0(self.s0, r) + tail_max(&self.low) + self.tail.as_ref().map_or(0.0, tail_max)
    }

    fn sampled(self: &Arc<Self>, scale: f64, spacing: f64, max_radius: f64) -> Result<SampledKernel> {
        SampledKernel::build(
            KernelKind::SmoothedPsf,
            Radial::Psf(self.clone()),
            scale,
            spacing,
            self.support * scale,
            max_radius,
        )
    }

    /// `T = T̃_{1/s₀}`, whose spectrum is identically 1 on `B_{s₀}`.
    pub fn sample_t(self: &Arc<Self>, spacing: f64, max_radius: f64) -> Result<SampledKernel> {
        self.sampled(1.0 / self.s0, spacing, max_radius)
    }

    /// The imaging PSF `K = T̃_s` for the optical scale `s = 1/(k NA)`.
    pub fn kernel(self: &Arc<Self>, s: f64, spacing: f64, max_radius: f64) -> Result<SampledKernel> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Domain(format!("optical scale must be positive, got {s}")));
        }
        self.sampled(s, spacing, max_radius)
    }
}
