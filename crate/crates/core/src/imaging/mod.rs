//! Forward model: coherent field `K ∗ u`, Hopkins intensity, hard and
//! smoothed exposure.

mod dense;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{BinaryPattern, Convolver, ScalarField};
use crate::kernels::{self, airy, smooth_heaviside, smooth_heaviside_derivative, SampledKernel, SmoothedPsf};
use dense::OffsetTable;

/// Largest mask support (in cells) the dense path handles without opt-in.
pub const DENSE_CELL_LIMIT: usize = 4608;

/// Which coherent point-spread function the optics use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum PsfModel {
    /// `K = T̃_s`, the smoothed kernel built to deviation `delta`.
    Smoothed { delta: f64 },
    /// The classical `K = Jinc_s`.
    Jinc,
    /// `K = G_s`, a Gaussian stand-in.
    Gaussian,
}

impl Default for PsfModel {
    fn default() -> Self {
        PsfModel::Smoothed { delta: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticsConfig {
    /// Wavenumber.
    pub k: f64,
    /// Numerical aperture.
    pub na: f64,
    /// Coherency coefficient; `None` means full coherence (`J ≡ 1`).
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Exposure threshold `h`.
    pub threshold: f64,
    /// Width `η` of the smoothed threshold.
    pub eta: f64,
    #[serde(default)]
    pub psf: PsfModel,
    /// Lets the dense partially coherent path exceed [`DENSE_CELL_LIMIT`].
    #[serde(default)]
    pub dense_opt_in: bool,
}

impl Default for OpticsConfig {
    fn default() -> Self {
        OpticsConfig::with_scale(1.0, PsfModel::default())
    }
}

impl OpticsConfig {
    /// A configuration with resolution scale `s`.
    pub fn with_scale(s: f64, psf: PsfModel) -> Self {
        OpticsConfig { k: 1.0 / s, na: 1.0, sigma: None, threshold: 0.5, eta: 0.1, psf, dense_opt_in: false }
    }

    /// `s = 1 / (k NA)`.
    pub fn s(&self) -> f64 {
        1.0 / (self.k * self.na)
    }

    /// `c = k σ NA`, the scale of the mutual intensity.
    pub fn k_sigma_na(&self) -> Option<f64> {
        self.sigma.map(|sg| self.k * sg * self.na)
    }

    /// Hard errors, one message per problem.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let pos = |name: &str, v: f64, out: &mut Vec<String>| {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("optics.{name} must be positive and finite (got {v})"));
            }
        };
        pos("k", self.k, &mut out);
        pos("na", self.na, &mut out);
        pos("eta", self.eta, &mut out);
        if let Some(sg) = self.sigma {
            pos("sigma", sg, &mut out);
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            out.push(format!("optics.threshold must lie in (0, 1) (got {})", self.threshold));
        }
        if let PsfModel::Smoothed { delta } = self.psf {
            pos("psf.delta", delta, &mut out);
        }
        out
    }

    /// Conditions outside the regime covered by the stability theory; the
    /// model still runs.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(1.0 / 3.0..=2.0 / 3.0).contains(&self.threshold) {
            out.push(format!("threshold {} lies outside [1/3, 2/3]", self.threshold));
        }
        if let Some(sg) = self.sigma {
            if sg > self.s() {
                out.push(format!("sigma {sg} exceeds s = {}", self.s()));
            }
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
}

/// The forward model bound to one grid.
pub struct Imager {
    cfg: OpticsConfig,
    template: ScalarField,
    kernel: SampledKernel,
    conv: Convolver,
    psf: Option<Arc<SmoothedPsf>>,
    margin: usize,
    k_table: std::sync::OnceLock<OffsetTable>,
    j_table: std::sync::OnceLock<Option<OffsetTable>>,
}

impl Imager {
    pub fn new(cfg: &OpticsConfig, grid: &ScalarField) -> Result<Self> {
        cfg.validate()?;
        let s = cfg.s();
        let h = grid.spacing();
        let extent = (grid.nx().max(grid.ny()) - 1) as f64 * h;
        let (kernel, psf, blur) = match cfg.psf {
            PsfModel::Smoothed { delta } => {
                let psf = kernels::smoothed_psf_cached(delta, &kernels::PsfSearch::default())?;
                if s > 1.0 / psf.s0() {
                    return Err(Error::Config(format!("s = {s} exceeds 1/s0 = {}", 1.0 / psf.s0())));
                }
                (psf.kernel(s, h, extent)?, Some(psf.clone()), s * psf.s0())
            }
            PsfModel::Jinc => (kernels::KernelSpec::Jinc { s }.sample(h, extent)?, None, s),
            PsfModel::Gaussian => (kernels::KernelSpec::Gaussian { s }.sample(h, extent)?, None, s),
        };
        let conv = Convolver::new(grid, &kernel)?;
        let margin = (4.0 * blur / h).ceil() as usize;
        if 2 * margin + 2 > grid.nx().min(grid.ny()) {
            return Err(Error::Config(format!(
                "padding of {margin} cells (4 blur widths) leaves no room on a {}x{} grid",
                grid.nx(),
                grid.ny()
            )));
        }
        Ok(Imager {
            cfg: cfg.clone(),
            template: grid.zeros_like(),
            kernel,
            conv,
            psf,
            margin,
            k_table: Default::default(),
            j_table: Default::default(),
        })
    }

    pub fn config(&self) -> &OpticsConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &ScalarField {
        &self.template
    }

    /// The sampled coherent PSF `K`.
    pub fn kernel(&self) -> &SampledKernel {
        &self.kernel
    }

    pub fn smoothed_psf(&self) -> Option<&Arc<SmoothedPsf>> {
        self.psf.as_ref()
    }

    /// Blur width: `s s₀` for the smoothed PSF, `s` otherwise.
    pub fn blur_scale(&self) -> f64 {
        self.cfg.s() * self.psf.as_ref().map_or(1.0, |p| p.s0())
    }

    /// Cells kept free of mask along each edge of the window.
    pub fn margin_cells(&self) -> usize {
        self.margin
    }

    /// Whether cell `(i, j)` may carry mask.
    pub fn in_support(&self, i: usize, j: usize) -> bool {
        let m = self.margin;
        i >= m && j >= m && i + m < self.template.nx() && j + m < self.template.ny()
    }

    /// Indicator of the cells that may carry mask.
    pub fn support_mask(&self) -> ScalarField {
        let mut out = self.template.clone();
        for j in 0..out.ny() {
            for i in 0..out.nx() {
                out.set(i, j, if self.in_support(i, j) { 1.0 } else { 0.0 });
            }
        }
        out
    }

    /// `max(‖K‖_{L¹}, Σ|K|h²)`, the norm entering the stability bounds.
    pub fn kernel_l1(&self) -> f64 {
        self.kernel.l1_norm().unwrap_or(0.0).max(self.kernel.grid_l1())
    }

    fn check_mask(&self, u: &ScalarField) -> Result<()> {
        self.template.check_same_grid(u)?;
        for j in 0..u.ny() {
            for i in 0..u.nx() {
                let v = u.get(i, j);
                if !(-1e-12..=1.0 + 1e-12).contains(&v) {
                    return Err(Error::Domain(format!("mask value {v} at ({i}, {j}) is outside [0, 1]")));
                }
                if v != 0.0 && !self.in_support(i, j) {
                    return Err(Error::Domain(format!(
                        "mask is nonzero at ({i}, {j}), inside the {}-cell padding band",
                        self.margin
                    )));
                }
            }
        }
        Ok(())
    }

    /// `v = K ∗ u`.
    pub fn coherent_field(&self, u: &ScalarField) -> Result<ScalarField> {
        self.check_mask(u)?;
        self.conv.apply(u)
    }

    /// `(K ∗ u)²`, the fully coherent intensity.
    pub fn coherent_intensity(&self, u: &ScalarField) -> Result<ScalarField> {
        Ok(self.coherent_field(u)?.map(|v| v * v))
    }

    fn k_table(&self) -> &OffsetTable {
        self.k_table.get_or_init(|| {
            let g = self.kernel.grid();
            let c = (g.nx() / 2) as isize;
            OffsetTable::new(self.template.nx(), self.template.ny(), |di, dj| {
                let (i, j) = (c + di, c + dj);
                if i < 0 || j < 0 || i >= g.nx() as isize || j >= g.ny() as isize {
                    0.0
                } else {
                    g.get(i as usize, j as usize)
                }
            })
        })
    }

    fn j_table(&self) -> Option<&OffsetTable> {
        self.j_table
            .get_or_init(|| {
                let c = self.cfg.k_sigma_na()?;
                let h = self.template.spacing();
                Some(OffsetTable::new(self.template.nx(), self.template.ny(), |di, dj| {
                    airy(c * h * ((di * di + dj * dj) as f64).sqrt())
                }))
            })
            .as_ref()
    }

    fn support_cells(&self, u: &ScalarField) -> Result<Vec<usize>> {
        let cells: Vec<usize> = (0..u.len()).filter(|&k| u.values()[k] != 0.0).collect();
        self.check_dense_size(cells.len())?;
        Ok(cells)
    }

    fn check_dense_size(&self, m: usize) -> Result<()> {
        if m > DENSE_CELL_LIMIT && !self.cfg.dense_opt_in {
            return Err(Error::Resource(format!(
                "dense Hopkins evaluation over {m} mask cells exceeds {DENSE_CELL_LIMIT}; set dense_opt_in to proceed"
            )));
        }
        Ok(())
    }

    /// Dense quadratic-form evaluation; `partial = false` forces `J ≡ 1`.
    pub fn dense_intensity(&self, u: &ScalarField, partial: bool) -> Result<ScalarField> {
        self.check_mask(u)?;
        let cells = self.support_cells(u)?;
        let j = if partial { self.j_table() } else { None };
        let m = dense::coupling(u.values(), &cells, j);
        let out = dense::intensity(self.k_table(), u.len(), &cells, m.view(), u.cell_area());
        u.with_values(out)
    }

    /// Hopkins intensity: the coherent fast path when `J ≡ 1`, the dense
    /// quadratic form otherwise.
    pub fn intensity(&self, u: &ScalarField) -> Result<ScalarField> {
        if self.cfg.sigma.is_none() {
            self.coherent_intensity(u)
        } else {
            self.dense_intensity(u, true)
        }
    }

    /// `∂/∂u Σ_x g(x) I(u)(x)` (plain partial derivatives, no cell weights).
    /// On the dense path the derivative is taken on the support cells of the
    /// window.
    pub fn intensity_vjp(&self, u: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
        self.check_mask(u)?;
        u.check_same_grid(g)?;
        if self.cfg.sigma.is_none() {
            let v = self.conv.apply(u)?;
            let w = v.zip_map(g, |v, g| 2.0 * v * g);
            return self.conv.apply_adjoint(&w);
        }
        let cells: Vec<usize> =
            (0..u.len()).filter(|&k| self.in_support(k % u.nx(), k / u.nx())).collect();
        self.check_dense_size(cells.len())?;
        let grad = dense::intensity_vjp(self.k_table(), g.values(), u.values(), &cells, self.j_table(), u.cell_area());
        u.with_values(grad)
    }

    /// `Φ_η(u) = φ((I(u) - h) / η)`.
    pub fn smoothed_exposure(&self, u: &ScalarField) -> Result<ScalarField> {
        let i = self.intensity(u)?;
        Ok(smoothed_exposure_of(&i, self.cfg.threshold, self.cfg.eta))
    }

    /// `Ω(u) = {I(u) > h}`.
    pub fn exposed(&self, u: &ScalarField) -> Result<BinaryPattern> {
        Ok(exposed_set(&self.intensity(u)?, self.cfg.threshold))
    }

    /// `ε_J = max |J(d) - 1|` over offsets `|d| ≤ 2R`, with `R` the radius of
    /// the smallest window-centered disk containing the support of `u`.
    pub fn coherence_defect(&self, u: &ScalarField) -> f64 {
        let Some(c) = self.cfg.k_sigma_na() else { return 0.0 };
        let mut r: f64 = 0.0;
        let center = {
            let o = u.origin();
            let h = u.spacing();
            [o[0] + 0.5 * (u.nx() - 1) as f64 * h, o[1] + 0.5 * (u.ny() - 1) as f64 * h]
        };
        for (k, &v) in u.values().iter().enumerate() {
            if v != 0.0 {
                let [x, y] = u.position_of(k);
                r = r.max((x - center[0]).hypot(y - center[1]));
            }
        }
        // |2J₁(t)/t - 1| grows on [0, 3.83]; beyond, sample densely
        let t_max = 2.0 * r * c;
        let n = 2000;
        (0..=n).map(|k| (airy(t_max * k as f64 / n as f64) - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `(‖P_J(u) - P_1(u)‖_∞, ‖K‖²_{L¹} ε_J)`.
    pub fn coherence_gap(&self, u: &ScalarField) -> Result<(f64, f64)> {
        if self.cfg.sigma.is_none() {
            return Ok((0.0, 0.0));
        }
        let partial = self.dense_intensity(u, true)?;
        let coherent = self.coherent_intensity(u)?;
        let gap = partial.values().iter().zip(coherent.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let l1 = self.kernel_l1();
        Ok((gap, l1 * l1 * self.coherence_defect(u)))
    }
}

/// `{I > h}`, with the contour traced on `I` at level `h`.
pub fn exposed_set(intensity: &ScalarField, h: f64) -> BinaryPattern {
    BinaryPattern::from_level(intensity, h)
}

pub fn smoothed_exposure_of(intensity: &ScalarField, h: f64, eta: f64) -> ScalarField {
    intensity.map(|i| smooth_heaviside((i - h) / eta))
}

/// `dΦ_η / dI` pointwise.
pub fn smoothed_exposure_derivative(intensity: &ScalarField, h: f64, eta: f64) -> ScalarField {
    intensity.map(|i| smooth_heaviside_derivative((i - h) / eta) / eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_imager(n: usize, s: f64) -> Imager {
        let grid = ScalarField::centered(n, 2.0 / n as f64).unwrap();
        Imager::new(&OpticsConfig::with_scale(s, PsfModel::Gaussian), &grid).unwrap()
    }

    #[test]
    fn zero_mask_gives_zero_everything() {
        let im = gaussian_imager(32, 0.08);
        let u = im.grid().zeros_like();
        assert_eq!(im.coherent_field(&u).unwrap().max_abs(), 0.0);
        assert_eq!(im.dense_intensity(&u, false).unwrap().max_abs(), 0.0);
        let phi = smoothed_exposure_of(&im.coherent_intensity(&u).unwrap(), 0.5, 0.2);
        assert_eq!(phi.max_abs(), 0.0);
        assert!(exposed_set(&phi, 0.25).is_empty());
    }

    #[test]
    fn padding_violations_are_domain_errors() {
        let im = gaussian_imager(32, 0.08);
        let mut u = im.grid().zeros_like();
        u.set(0, 5, 1.0);
        assert!(matches!(im.coherent_field(&u), Err(Error::Domain(_))));
        let mut u = im.grid().zeros_like();
        u.set(16, 16, 1.5);
        assert!(matches!(im.coherent_field(&u), Err(Error::Domain(_))));
    }

    #[test]
    fn coherent_vjp_matches_finite_differences() {
        let im = gaussian_imager(24, 0.1);
        let u = im.support_mask().like_fn(|x, y| 0.5 + 0.3 * (3.0 * x).sin() * y).zip_map(&im.support_mask(), |a, b| a * b);
        let g = u.like_fn(|x, y| (x - 0.2 * y).cos());
        let grad = im.intensity_vjp(&u, &g).unwrap();
        let f = |u: &ScalarField| -> f64 {
            im.coherent_intensity(u).unwrap().values().iter().zip(g.values()).map(|(a, b)| a * b).sum()
        };
        for k in [24 * 10 + 10, 24 * 12 + 7, 24 * 15 + 14] {
            let t = 1e-6;
            let mut up = u.clone();
            up.values_mut()[k] += t;
            let mut dn = u.clone();
            dn.values_mut()[k] -= t;
            let fd = (f(&up) - f(&dn)) / (2.0 * t);
            assert!((fd - grad.values()[k]).abs() < 1e-6 * (1.0 + fd.abs()), "{fd} vs {}", grad.values()[k]);
        }
    }

    #[test]
    fn dense_path_requires_opt_in_for_large_supports() {
        let n = 80;
        let grid = ScalarField::centered(n, 2.0 / n as f64).unwrap();
        let mut cfg = OpticsConfig::with_scale(0.02, PsfModel::Gaussian);
        cfg.sigma = Some(0.005);
        let im = Imager::new(&cfg, &grid).unwrap();
        let u = im.support_mask();
        assert!(matches!(im.intensity(&u), Err(Error::Resource(_))));
    }

    #[test]
    fn warnings_flag_threshold_and_sigma() {
        let mut cfg = OpticsConfig::with_scale(0.1, PsfModel::Gaussian);
        assert!(cfg.warnings().is_empty());
        cfg.threshold = 0.25;
        cfg.sigma = Some(0.2);
        assert_eq!(cfg.warnings().len(), 2);
        cfg.eta = -1.0;
        cfg.k = 0.0;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("optics.k") && err.contains("optics.eta"), "{err}");
    }
}
