//! The phase-field objective `F_ε = d_{η(ε)}(u, Ω₀) + b P_ε(u)`, its
//! gradient, projected descent and the ε-continuation.
//!
//! Gradients here are L² gradients: partial derivatives of the discrete
//! sums divided by the cell area, so step sizes do not depend on the grid.

mod sweep;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::fields::{gradient, gradient_adjoint, BinaryPattern, ScalarField};
use crate::geometry::{perimeter, strict_distance, DistanceReport};
use crate::imaging::{smoothed_exposure_derivative, smoothed_exposure_of, Imager};
use crate::phasefield::{
    limit_perimeter, modica_mortola_gradient, modica_mortola_terms, DoubleWell, DoubleWellSpec, Region,
};

pub use sweep::{gamma_sweep, gamma_sweep_observed, mollified_target, SweepRecord, SweepTrace};

/// Guard inside `√(|∇Φ|² + ι)`.
pub const GRADIENT_GUARD: f64 = 1e-12;

/// `√(x² + κ²) − κ`.
pub fn smooth_abs(x: f64, kappa: f64) -> f64 {
    x.hypot(kappa) - kappa
}

pub fn smooth_abs_derivative(x: f64, kappa: f64) -> f64 {
    x / x.hypot(kappa)
}

/// Line-search and termination parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepControl {
    pub initial_step: f64,
    /// Step shrink factor on rejection, in `(0, 1)`.
    pub backtrack: f64,
    pub max_backtracks: usize,
    pub max_iterations: usize,
    /// Stop when the relative decrease of one accepted step falls below this.
    pub tolerance: f64,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            initial_step: 1e-3,
            backtrack: 0.5,
            max_backtracks: 40,
            max_iterations: 1000,
            tolerance: 1e-6,
            armijo: 1e-4,
        }
    }
}

/// Phase-field settings of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseFieldConfig {
    pub well: DoubleWell,
    pub p: f64,
    pub region: Region,
}

impl Default for PhaseFieldConfig {
    fn default() -> Self {
        PhaseFieldConfig { well: DoubleWell::Standard, p: 2.0, region: Region::Inscribed }
    }
}

impl PhaseFieldConfig {
    pub fn spec(&self) -> Result<DoubleWellSpec> {
        DoubleWellSpec::new(self.well, self.p, self.region)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveConfig {
    /// Perimeter weight `b`.
    pub b: f64,
    /// Strictly decreasing `ε` values.
    pub eps_schedule: Vec<f64>,
    /// `η(ε) = η₀ ε`; `None` picks `η₀` so that `η(ε₀)` is half the
    /// exposure threshold.
    pub eta0: Option<f64>,
    /// Smoothing of the outer absolute value; `None` means `1e-3 P(Ω₀)`.
    pub kappa: Option<f64>,
    pub step: StepControl,
    /// Optional L¹ radius around the target for the `𝒜_γ` constraint.
    pub gamma: Option<f64>,
    pub phase: PhaseFieldConfig,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig {
            b: 0.02,
            eps_schedule: vec![0.08, 0.05, 0.035, 0.025],
            eta0: None,
            kappa: None,
            step: StepControl::default(),
            gamma: None,
            phase: PhaseFieldConfig::default(),
        }
    }
}

impl ObjectiveConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.b > 0.0 && self.b.is_finite()) {
            out.push(format!("objective.b must be positive (got {})", self.b));
        }
        if self.eps_schedule.is_empty() {
            out.push("objective.eps_schedule must not be empty".into());
        }
        if self.eps_schedule.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            out.push("objective.eps_schedule entries must be positive".into());
        }
        if self.eps_schedule.windows(2).any(|w| w[1] >= w[0]) {
            out.push("objective.eps_schedule must be strictly decreasing".into());
        }
        if let Some(e) = self.eta0 {
            if !(e > 0.0 && e.is_finite()) {
                out.push(format!("objective.eta0 must be positive (got {e})"));
            }
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0 && k.is_finite()) {
                out.push(format!("objective.kappa must be positive (got {k})"));
            }
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0) {
                out.push(format!("objective.gamma must be positive (got {g})"));
            }
        }
        let s = &self.step;
        if !(s.initial_step > 0.0) {
            out.push("objective.step.initial_step must be positive".into());
        }
        if !(s.backtrack > 0.0 && s.backtrack < 1.0) {
            out.push("objective.step.backtrack must lie in (0, 1)".into());
        }
        if !(s.armijo > 0.0 && s.armijo < 1.0) {
            out.push("objective.step.armijo must lie in (0, 1)".into());
        }
        if !(s.tolerance >= 0.0) {
            out.push("objective.step.tolerance must be nonnegative".into());
        }
        if let Err(e) = self.phase.spec() {
            out.push(format!("objective.phase: {e}"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p.join("; ")))
        }
    }

    /// `η₀`, resolving the default against the exposure threshold.
    pub fn eta0_for(&self, threshold: f64) -> f64 {
        self.eta0.unwrap_or_else(|| 0.5 * threshold / self.eps_schedule.first().copied().unwrap_or(1.0))
    }
}

/// `d_η(u, Ω₀) = ∫|Φ_η(u) − χ_{Ω₀}| + smooth_abs(∫|∇Φ_η(u)| − P(Ω₀); κ)`.
pub fn d_eta(imager: &Imager, u: &ScalarField, target: &BinaryPattern, eta: f64, kappa: f64) -> Result<f64> {
    Ok(d_eta_parts(imager, u, target, eta, kappa, false)?.0)
}

/// `d_η` and its L² gradient.
pub fn d_eta_with_gradient(
    imager: &Imager,
    u: &ScalarField,
    target: &BinaryPattern,
    eta: f64,
    kappa: f64,
) -> Result<(f64, ScalarField)> {
    let (v, g) = d_eta_parts(imager, u, target, eta, kappa, true)?;
    Ok((v, g.expect("requested")))
}

/// `∫ (√(|∇Φ|² + ι) − √ι)`, the guarded total variation.
pub fn guarded_total_variation(phi: &ScalarField) -> f64 {
    let (gx, gy) = gradient(phi);
    let r = GRADIENT_GUARD.sqrt();
    gx.values().iter().zip(gy.values()).map(|(a, b)| (a * a + b * b + GRADIENT_GUARD).sqrt() - r).sum::<f64>()
        * phi.cell_area()
}

fn d_eta_parts(
    imager: &Imager,
    u: &ScalarField,
    target: &BinaryPattern,
    eta: f64,
    kappa: f64,
    want_gradient: bool,
) -> Result<(f64, Option<ScalarField>)> {
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("eta must be positive, got {eta}")));
    }
    u.check_same_grid(target.grid())?;
    let h = imager.config().threshold;
    let intensity = imager.intensity(u)?;
    let phi = smoothed_exposure_of(&intensity, h, eta);
    let chi = target.grid();
    let area = u.cell_area();
    let l1: f64 = phi.values().iter().zip(chi.values()).map(|(a, b)| (a - b).abs()).sum::<f64>() * area;
    let tv = guarded_total_variation(&phi);
    let gap = tv - perimeter(target);
    let value = l1 + smooth_abs(gap, kappa);
    if !want_gradient {
        return Ok((value, None));
    }
    // ∂/∂Φ of the discrete sums
    let (gx, gy) = gradient(&phi);
    let mut wx = gx.clone();
    let mut wy = gy.clone();
    for k in 0..wx.len() {
        let (a, b) = (gx.values()[k], gy.values()[k]);
        let n = (a * a + b * b + GRADIENT_GUARD).sqrt();
        wx.values_mut()[k] = area * a / n;
        wy.values_mut()[k] = area * b / n;
    }
    let tv_grad = gradient_adjoint(&wx, &wy);
    let sa = smooth_abs_derivative(gap, kappa);
    let dphi = smoothed_exposure_derivative(&intensity, h, eta);
    let mut g_i = phi.zeros_like();
    for k in 0..g_i.len() {
        let d = phi.values()[k] - chi.values()[k];
        let sign = if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        };
        g_i.values_mut()[k] = (sign * area + sa * tv_grad.values()[k]) * dphi.values()[k];
    }
    let du = imager.intensity_vjp(u, &g_i)?;
    Ok((value, Some(du.scaled(1.0 / area))))
}

/// One evaluation of `F_ε` and its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub f: ExtReal,
    pub d_eta: f64,
    pub p_eps: ExtReal,
}

/// `F_ε` bound to optics, target and configuration.
pub struct Objective<'a> {
    imager: &'a Imager,
    target: &'a BinaryPattern,
    cfg: &'a ObjectiveConfig,
    spec: DoubleWellSpec,
    feasible: ScalarField,
    kappa: f64,
    eta0: f64,
    target_perimeter: f64,
}

impl<'a> Objective<'a> {
    pub fn new(imager: &'a Imager, target: &'a BinaryPattern, cfg: &'a ObjectiveConfig) -> Result<Self> {
        cfg.validate()?;
        imager.grid().check_same_grid(target.grid())?;
        let spec = cfg.phase.spec()?;
        let support = imager.support_mask();
        let interior = spec.region.interior_mask(imager.grid());
        let feasible = support.zip_map(&interior, |a, b| a * b);
        let target_perimeter = perimeter(target);
        let kappa = cfg.kappa.unwrap_or(1e-3 * target_perimeter).max(1e-9);
        let eta0 = cfg.eta0_for(imager.config().threshold);
        Ok(Objective { imager, target, cfg, spec, feasible, kappa, eta0, target_perimeter })
    }

    pub fn imager(&self) -> &Imager {
        self.imager
    }
    pub fn target(&self) -> &BinaryPattern {
        self.target
    }
    pub fn config(&self) -> &ObjectiveConfig {
        self.cfg
    }
    pub fn spec(&self) -> &DoubleWellSpec {
        &self.spec
    }
    /// Cells where the phase field may be nonzero.
    pub fn feasible(&self) -> &ScalarField {
        &self.feasible
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn target_perimeter(&self) -> f64 {
        self.target_perimeter
    }

    pub fn eta(&self, eps: f64) -> f64 {
        self.eta0 * eps
    }

    fn is_feasible(&self, u: &ScalarField) -> bool {
        u.values().iter().zip(self.feasible.values()).all(|(&x, &f)| f == 1.0 || x == 0.0)
    }

    pub fn evaluate(&self, u: &ScalarField, eps: f64) -> Result<Evaluation> {
        if !self.is_feasible(u) {
            let d = d_eta(self.imager, &self.clip(u), self.target, self.eta(eps), self.kappa)?;
            return Ok(Evaluation { f: ExtReal::Infinite, d_eta: d, p_eps: ExtReal::Infinite });
        }
        let d = d_eta(self.imager, u, self.target, self.eta(eps), self.kappa)?;
        let (w, g) = modica_mortola_terms(u, eps, &self.spec)?;
        let p = w + g;
        Ok(Evaluation { f: ExtReal::Finite(d + self.cfg.b * p), d_eta: d, p_eps: ExtReal::Finite(p) })
    }

    /// `F_ε(u)`.
    pub fn f_eps(&self, u: &ScalarField, eps: f64) -> Result<ExtReal> {
        Ok(self.evaluate(u, eps)?.f)
    }

    /// L² gradient of the finite branch of `F_ε`.
    pub fn gradient(&self, u: &ScalarField, eps: f64) -> Result<ScalarField> {
        let (_, g) = d_eta_with_gradient(self.imager, u, self.target, self.eta(eps), self.kappa)?;
        let mm = modica_mortola_gradient(u, eps, &self.spec)?;
        Ok(g.zip_map(&mm, |a, b| a + self.cfg.b * b))
    }

    /// Box clamp plus zeroing outside the feasible cells (the collar and the
    /// margin band included), followed by the optional `𝒜_γ` projection.
    pub fn project(&self, u: &ScalarField) -> ScalarField {
        let clipped = self.clip(u);
        match self.cfg.gamma {
            Some(g) => self.project_l1_ball(&clipped, g),
            None => clipped,
        }
    }

    fn clip(&self, u: &ScalarField) -> ScalarField {
        u.zip_map(&self.feasible, |x, f| if f == 1.0 { x.clamp(0.0, 1.0) } else { 0.0 })
    }

    /// Nearest point of `{‖v − χ‖_{L¹} ≤ γ}` (with `χ` the target restricted
    /// to the feasible cells) by soft thresholding of `u − χ`.
    fn project_l1_ball(&self, u: &ScalarField, gamma: f64) -> ScalarField {
        let chi = self.target.grid().zip_map(&self.feasible, |a, b| a * b);
        let area = u.cell_area();
        let diff: Vec<f64> = u.values().iter().zip(chi.values()).map(|(a, b)| a - b).collect();
        let norm = |lam: f64| diff.iter().map(|d| (d.abs() - lam).max(0.0)).sum::<f64>() * area;
        if norm(0.0) <= gamma {
            return u.clone();
        }
        let (mut lo, mut hi) = (0.0, diff.iter().fold(0.0f64, |m, d| m.max(d.abs())));
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if norm(mid) > gamma {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let values = diff
            .iter()
            .zip(chi.values())
            .map(|(d, c)| c + d.signum() * (d.abs() - hi).max(0.0))
            .collect();
        u.with_values(values).expect("finite")
    }

    /// `F₀(u) = d₃(Ω(ū), Ω₀) + b P(ū)` with `ū` the binarization of `u` at ½.
    pub fn f_zero(&self, u: &ScalarField) -> Result<ExtReal> {
        f_zero(self.imager, u, self.target, self.cfg.b, &self.spec)
    }
}

/// `F₀(u) = d₃(Ω(ū), Ω₀) + b P(ū)`, `ū` the binarization of `u` at ½;
/// `+inf` if `ū` leaves 𝒟.
pub fn f_zero(imager: &Imager, u: &ScalarField, target: &BinaryPattern, b: f64, spec: &DoubleWellSpec) -> Result<ExtReal> {
    let bin = binarize(u);
    let per = limit_perimeter(&bin, spec);
    if !per.is_finite() {
        return Ok(ExtReal::Infinite);
    }
    let report = strict_distance(&imager.exposed(&bin)?, target)?;
    Ok(ExtReal::Finite(report.d3) + b * per)
}

/// `u > ½` as a 0/1 field.
pub fn binarize(u: &ScalarField) -> ScalarField {
    u.map(|t| if t > 0.5 { 1.0 } else { 0.0 })
}

/// `d₃` report of the printed set of a mask against the target.
pub fn printed_report(imager: &Imager, u: &ScalarField, target: &BinaryPattern) -> Result<DistanceReport> {
    strict_distance(&imager.exposed(u)?, target)
}

/// One accepted descent step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub f_eps: f64,
    pub d_eta: f64,
    pub p_eps: f64,
    pub step: f64,
    pub backtracks: usize,
}

impl IterRecord {
    pub const CSV_HEADER: &'static str = "iter,f_eps,d_eta,p_eps,step,backtracks";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{},{}", self.iter, self.f_eps, self.d_eta, self.p_eps, self.step, self.backtracks)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub eps: f64,
    pub eta: f64,
    /// `F_ε(u₀)`; the first entry of `iterations` is the first accepted step.
    pub initial: f64,
    pub iterations: Vec<IterRecord>,
    pub converged: bool,
    /// The line search failed to find a decrease.
    pub stalled: bool,
}

impl Diagnostics {
    pub fn final_value(&self) -> f64 {
        self.iterations.last().map_or(self.initial, |r| r.f_eps)
    }

    /// Whether every accepted step was non-increasing.
    pub fn monotone(&self) -> bool {
        let mut prev = self.initial;
        self.iterations.iter().all(|r| {
            let ok = r.f_eps <= prev;
            prev = r.f_eps;
            ok
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(IterRecord::CSV_HEADER);
        s.push('\n');
        for r in &self.iterations {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }
}

fn l2_dot(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum::<f64>() * a.cell_area()
}

/// Projected gradient descent on `F_ε` with Armijo backtracking.
pub fn minimize_f_eps(obj: &Objective, u0: &ScalarField, eps: f64) -> Result<(ScalarField, Diagnostics)> {
    minimize_f_eps_observed(obj, u0, eps, &mut |_, _| {})
}

/// [`minimize_f_eps`], calling `observe(iter, u)` after every accepted step.
pub fn minimize_f_eps_observed(
    obj: &Objective,
    u0: &ScalarField,
    eps: f64,
    observe: &mut dyn FnMut(usize, &ScalarField),
) -> Result<(ScalarField, Diagnostics)> {
    let ctl = &obj.config().step;
    let mut u = obj.project(u0);
    let mut cur = obj.evaluate(&u, eps)?;
    let mut f = cur.f.unwrap();
    let mut diag = Diagnostics {
        eps,
        eta: obj.eta(eps),
        initial: f,
        iterations: Vec::new(),
        converged: false,
        stalled: false,
    };
    let mut step = ctl.initial_step;
    for iter in 1..=ctl.max_iterations {
        let g = obj.gradient(&u, eps)?;
        // A zero projected gradient step means `u` is stationary.
        if obj.project(&u.zip_map(&g, |x, d| x - step * d)) == u {
            diag.converged = true;
            break;
        }
        let mut accepted = None;
        let mut alpha = step;
        for backtracks in 0..=ctl.max_backtracks {
            let trial = obj.project(&u.zip_map(&g, |x, d| x - alpha * d));
            let delta = trial.zip_map(&u, |a, b| a - b);
            let predicted = l2_dot(&g, &delta);
            let ev = obj.evaluate(&trial, eps)?;
            if let ExtReal::Finite(ft) = ev.f {
                if ft <= f + ctl.armijo * predicted && ft <= f {
                    accepted = Some((trial, ev, ft, alpha, backtracks));
                    break;
                }
            }
            alpha *= ctl.backtrack;
        }
        let Some((trial, ev, ft, alpha, backtracks)) = accepted else {
            diag.stalled = true;
            break;
        };
        let decrease = f - ft;
        u = trial;
        cur = ev;
        f = ft;
        diag.iterations.push(IterRecord {
            iter,
            f_eps: f,
            d_eta: cur.d_eta,
            p_eps: cur.p_eps.unwrap(),
            step: alpha,
            backtracks,
        });
        observe(iter, &u);
        step = if backtracks == 0 { alpha / ctl.backtrack } else { alpha };
        if decrease <= ctl.tolerance * f.abs().max(1e-12) {
            diag.converged = true;
            break;
        }
    }
    Ok((u, diag))
}

/// `‖Φ_η(u) − χ_{Ω(u)}‖_{L¹}` for each `η`.
pub fn threshold_consistency(imager: &Imager, u: &ScalarField, etas: &[f64]) -> Result<Vec<f64>> {
    let intensity = imager.intensity(u)?;
    let h = imager.config().threshold;
    let omega = crate::imaging::exposed_set(&intensity, h);
    etas.iter()
        .map(|&eta| crate::fields::l1_distance(&smoothed_exposure_of(&intensity, h, eta), omega.grid()))
        .collect()
}
