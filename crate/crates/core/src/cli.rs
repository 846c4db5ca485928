//! Run configuration and the four commands behind the `phaselitho` binary:
//! `forward`, `invert`, `metrics` and `kernel-build`.
//!
//! Every command writes a `manifest.json` echoing the configuration, its
//! hash and content hashes of all inputs and outputs. Output files carry the
//! configuration hash in their sidecars. Nothing time- or host-dependent is
//! written, so identical runs produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fields::io::{read_csv, read_image_on, write_bitmap_pgm, write_contours_json, write_pgm16};
use crate::fields::{BinaryPattern, ScalarField};
use crate::geometry::{read_shape_json, strict_distance, DistanceReport};
use crate::imaging::{exposed_set, Imager, OpticsConfig, PsfModel};
use crate::kernels::{build_smoothed_psf, load_cached_psf, params_hash, store_psf, PsfSearch};
use crate::optimize::{gamma_sweep_observed, Objective, ObjectiveConfig};

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Invalid configuration or input.
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;
/// Optimizer stall or failed kernel construction.
pub const EXIT_STALL: i32 = 4;

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::ConstructionFailed { .. } => EXIT_STALL,
        _ => EXIT_VALIDATION,
    }
}

/// A uniform grid centered on the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    /// Cell size; `None` makes the window `[-1, 1]` wide in `x`.
    pub spacing: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { nx: 128, ny: 128, spacing: None }
    }
}

impl GridConfig {
    pub fn spacing(&self) -> f64 {
        self.spacing.unwrap_or(2.0 / self.nx.max(1) as f64)
    }

    pub fn build(&self) -> Result<ScalarField> {
        let h = self.spacing();
        let origin = [-0.5 * (self.nx as f64 - 1.0) * h, -0.5 * (self.ny as f64 - 1.0) * h];
        ScalarField::zeros(self.nx, self.ny, h, origin)
    }

    fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.nx < 8 || self.ny < 8 {
            out.push(format!("grid must be at least 8x8 (got {}x{})", self.nx, self.ny));
        }
        if let Some(h) = self.spacing {
            if !(h > 0.0 && h.is_finite()) {
                out.push(format!("grid.spacing must be positive (got {h})"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelBuildConfig {
    /// Target bound on the deviation of the smoothed PSF from the Gaussian.
    pub delta: f64,
    pub search: PsfSearch,
}

impl Default for KernelBuildConfig {
    fn default() -> Self {
        KernelBuildConfig { delta: 0.05, search: PsfSearch::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Mask for `forward`.
    pub mask: Option<PathBuf>,
    /// Target for `invert`.
    pub target: Option<PathBuf>,
    /// Patterns for `metrics`.
    pub pattern_a: Option<PathBuf>,
    pub pattern_b: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub optics: OpticsConfig,
    pub objective: ObjectiveConfig,
    pub kernel: KernelBuildConfig,
    pub paths: Paths,
    pub seed: u64,
    /// Write a phase-field snapshot every this many descent steps (0: off).
    pub snapshot_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid: GridConfig::default(),
            optics: OpticsConfig::with_scale(1.0, PsfModel::default()),
            objective: ObjectiveConfig::default(),
            kernel: KernelBuildConfig::default(),
            paths: Paths::default(),
            seed: 0,
            snapshot_every: 0,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Every problem found, each prefixed with its section.
    pub fn problems(&self) -> Vec<String> {
        let mut out = self.grid.problems();
        out.extend(self.optics.problems());
        out.extend(self.objective.problems());
        if !(self.kernel.delta > 0.0 && self.kernel.delta.is_finite()) {
            out.push(format!("kernel.delta must be positive (got {})", self.kernel.delta));
        }
        if self.kernel.search.b0_values.is_empty() || self.kernel.search.b0_values.iter().any(|&b| !(b > 0.0)) {
            out.push("kernel.search.b0_values must be a nonempty list of positive numbers".into());
        }
        out
    }

    /// All problems as one error.
    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p.join("; ")))
        }
    }

    /// SHA-256 of the configuration, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.paths.out = None;
        sha256_hex(serde_json::to_string(&c).expect("serializable").as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn file_hash(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// A mask in `[0, 1]` on `grid` from PGM/PNG, field CSV or polygon JSON.
pub fn load_mask(path: &Path, grid: &ScalarField) -> Result<ScalarField> {
    if is_json(path) {
        return Ok(read_shape_json(path)?.rasterize(grid));
    }
    if is_csv(path) {
        let f = read_csv(path)?;
        grid.check_same_grid(&f)?;
        return Ok(f);
    }
    read_image_on(path, grid)
}

/// A pattern on `grid`: polygon JSON keeps its exact contour, images are
/// thresholded at ½.
pub fn load_pattern(path: &Path, grid: &ScalarField) -> Result<BinaryPattern> {
    if is_json(path) {
        return Ok(read_shape_json(path)?.pattern(grid));
    }
    let f = load_mask(path, grid)?;
    BinaryPattern::from_bitmap(&f.map(|v| if v >= 0.5 { 1.0 } else { 0.0 }))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub threads: Option<usize>,
    pub warnings: Vec<String>,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub status: String,
    pub summary: serde_json::Value,
}

/// What a command did.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    pub message: String,
    pub outputs: Vec<PathBuf>,
}

/// Flags shared by all commands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(o) = &self.out {
            cfg.paths.out = Some(o.clone());
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
    }
}

struct Run {
    cfg: RunConfig,
    hash: String,
    out: PathBuf,
    outputs: Vec<PathBuf>,
    threads: Option<usize>,
}

impl Run {
    fn start(mut cfg: RunConfig, ov: &Overrides) -> Result<Run> {
        ov.apply(&mut cfg);
        cfg.validate()?;
        let out = cfg.paths.out.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&out)?;
        Ok(Run { hash: cfg.hash(), cfg, out, outputs: Vec::new(), threads: ov.threads })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.out.join(name);
        self.outputs.push(p.clone());
        p
    }

    fn pgm16(&mut self, name: &str, f: &ScalarField) -> Result<()> {
        let p = self.path(name);
        write_pgm16(&p, f, Some(&self.hash))?;
        let side = crate::fields::io::sidecar_path(&p);
        self.outputs.push(side);
        Ok(())
    }

    fn bitmap(&mut self, name: &str, p: &BinaryPattern) -> Result<()> {
        let path = self.path(name);
        write_bitmap_pgm(&path, p, Some(&self.hash))?;
        let side = crate::fields::io::sidecar_path(&path);
        self.outputs.push(side);
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(p, body)?;
        Ok(())
    }

    fn finish(mut self, command: &str, inputs: &[&Path], status: &str, summary: serde_json::Value) -> Result<Vec<PathBuf>> {
        let record = |p: &Path, base: Option<&Path>| -> Result<FileRecord> {
            let shown = base.and_then(|b| p.strip_prefix(b).ok()).unwrap_or(p);
            Ok(FileRecord { path: shown.display().to_string(), sha256: file_hash(p)? })
        };
        let inputs = inputs.iter().map(|p| record(p, None)).collect::<Result<Vec<_>>>()?;
        let outputs = self.outputs.iter().map(|p| record(p, Some(&self.out))).collect::<Result<Vec<_>>>()?;
        let mut config = self.cfg.clone();
        config.paths.out = None;
        let manifest = Manifest {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: self.hash.clone(),
            config,
            threads: self.threads,
            warnings: self.cfg.optics.warnings(),
            inputs,
            outputs,
            status: status.into(),
            summary,
        };
        let path = self.out.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        self.outputs.push(path);
        Ok(self.outputs)
    }
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| Error::Config(format!("no {what} given")))
}

/// Intensity, printed pattern and its contour for a mask.
pub fn cmd_forward(cfg: RunConfig, ov: &Overrides) -> Result<Outcome> {
    let mut run = Run::start(cfg, ov)?;
    let mask_path = required(&run.cfg.paths.mask, "mask")?.to_path_buf();
    let grid = run.cfg.grid.build()?;
    let mask = load_mask(&mask_path, &grid)?;
    let imager = Imager::new(&run.cfg.optics, &grid)?;
    let intensity = imager.intensity(&mask)?;
    let printed = exposed_set(&intensity, run.cfg.optics.threshold);
    run.pgm16("intensity.pgm", &intensity)?;
    run.bitmap("exposure.pgm", &printed)?;
    let contours = run.path("contours.json");
    write_contours_json(&contours, &printed)?;
    let summary = serde_json::json!({
        "max_intensity": intensity.max(),
        "printed_area": printed.area(),
        "printed_perimeter": crate::geometry::perimeter(&printed),
        "components": crate::geometry::components(&printed),
    });
    let message = format!(
        "printed area {:.6}, perimeter {:.6}, max intensity {:.6}",
        printed.area(),
        crate::geometry::perimeter(&printed),
        intensity.max()
    );
    let outputs = run.finish("forward", &[&mask_path], "ok", summary)?;
    Ok(Outcome { exit_code: EXIT_OK, message, outputs })
}

/// Runs the ε-continuation for a target and writes the optimized mask.
pub fn cmd_invert(cfg: RunConfig, ov: &Overrides) -> Result<Outcome> {
    let mut run = Run::start(cfg, ov)?;
    let target_path = required(&run.cfg.paths.target, "target")?.to_path_buf();
    let grid = run.cfg.grid.build()?;
    let target = load_pattern(&target_path, &grid)?;
    let imager = Imager::new(&run.cfg.optics, &grid)?;
    let objective_cfg = run.cfg.objective.clone();
    let obj = Objective::new(&imager, &target, &objective_cfg)?;

    let every = run.cfg.snapshot_every;
    let mut snapshots: Vec<(String, ScalarField)> = Vec::new();
    let trace = gamma_sweep_observed(&obj, &mut |stage, iter, u| {
        if every > 0 && iter % every == 0 {
            snapshots.push((format!("snapshot_{stage:02}_{iter:05}.pgm"), u.clone()));
        }
    })?;
    for (name, u) in &snapshots {
        run.pgm16(name, u)?;
    }
    let last = trace.last().minimizer.clone();
    run.pgm16("phase.pgm", &last)?;
    let mask = BinaryPattern::from_bitmap(&trace.final_mask)?;
    run.bitmap("mask.pgm", &mask)?;
    let printed = imager.exposed(&trace.final_mask)?;
    run.bitmap("printed.pgm", &printed)?;
    run.text("trace.csv", &trace.to_csv())?;
    for (k, r) in trace.records.iter().enumerate() {
        run.text(&format!("iterations_{k:02}.csv"), &r.diagnostics.to_csv())?;
    }
    run.text("report.csv", &trace.final_report.to_csv())?;

    let status = if trace.stalled { "stalled" } else { "ok" };
    let summary = serde_json::json!({
        "trace": &trace,
        "final_d3": trace.final_report.d3,
        "identity_d3": trace.identity_report.d3,
    });
    let message = format!(
        "final d3 {:.6} (target as mask: {:.6}), F0 {}{}",
        trace.final_report.d3,
        trace.identity_report.d3,
        trace.f_zero,
        if trace.stalled { ", line search stalled" } else { "" }
    );
    let outputs = run.finish("invert", &[&target_path], status, summary)?;
    Ok(Outcome { exit_code: if trace.stalled { EXIT_STALL } else { EXIT_OK }, message, outputs })
}

/// Distances between two patterns as one CSV row.
pub fn cmd_metrics(cfg: RunConfig, ov: &Overrides) -> Result<Outcome> {
    let mut run = Run::start(cfg, ov)?;
    let a_path = required(&run.cfg.paths.pattern_a, "first pattern")?.to_path_buf();
    let b_path = required(&run.cfg.paths.pattern_b, "second pattern")?.to_path_buf();
    let grid = run.cfg.grid.build()?;
    let a = load_pattern(&a_path, &grid)?;
    let b = load_pattern(&b_path, &grid)?;
    let report: DistanceReport = strict_distance(&a, &b)?;
    let csv = report.to_csv();
    run.text("metrics.csv", &csv)?;
    let outputs = run.finish("metrics", &[&a_path, &b_path], "ok", serde_json::to_value(report)?)?;
    Ok(Outcome { exit_code: EXIT_OK, message: csv.trim_end().to_string(), outputs })
}

/// Builds the smoothed PSF into the output directory, or does nothing if a
/// construction with the same parameters is already there.
pub fn cmd_kernel_build(cfg: RunConfig, ov: &Overrides) -> Result<Outcome> {
    let mut run = Run::start(cfg, ov)?;
    let (delta, search) = (run.cfg.kernel.delta, run.cfg.kernel.search.clone());
    if let Some((header, _)) = load_cached_psf(&run.out, delta, &search)? {
        return Ok(Outcome {
            exit_code: EXIT_OK,
            message: format!(
                "cache hit {}: deviation {:.6} (s0 {}, b {})",
                &header.params_hash[..16],
                header.achieved_deviation,
                header.s0,
                header.b
            ),
            outputs: Vec::new(),
        });
    }
    let psf = match build_smoothed_psf(delta, &search) {
        Ok(p) => p,
        Err(e @ Error::ConstructionFailed { .. }) => {
            if let Error::ConstructionFailed { best_deviation, target } = &e {
                let report = serde_json::json!({
                    "params_hash": params_hash(delta, &search),
                    "target_deviation": target,
                    "best_deviation": best_deviation,
                    "search": &search,
                });
                run.text("kernel_build_failed.json", &serde_json::to_string_pretty(&report)?)?;
            }
            return Err(e);
        }
        Err(e) => return Err(e),
    };
    let header = store_psf(&run.out, &psf, &search)?;
    let message = format!(
        "deviation {:.6} <= {delta} (s0 {}, b {}, support {:.3})",
        psf.deviation(),
        psf.s0(),
        psf.b(),
        psf.support()
    );
    run.outputs.push(header);
    for entry in fs::read_dir(&run.out)? {
        let p = entry?.path();
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.ends_with(".csv") && name.starts_with("smoothed_psf_") {
            run.outputs.push(p);
        }
    }
    let summary = serde_json::json!({
        "deviation": psf.deviation(),
        "unit_deviation": psf.unit_deviation(),
        "s0": psf.s0(),
        "b": psf.b(),
    });
    let outputs = run.finish("kernel-build", &[], "ok", summary)?;
    Ok(Outcome { exit_code: EXIT_OK, message, outputs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problems_are_aggregated() {
        let mut cfg = RunConfig::default();
        cfg.grid.nx = 4;
        cfg.optics.threshold = 2.0;
        cfg.objective.b = 0.0;
        cfg.kernel.delta = -1.0;
        let p = cfg.problems();
        assert_eq!(p.len(), 4, "{p:?}");
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("grid") && msg.contains("threshold") && msg.contains("objective.b"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(RunConfig::from_json(r#"{"grid": {"nx": 64, "ny": 64, "dx": 1}}"#).is_err());
        let cfg = RunConfig::from_json(r#"{"grid": {"nx": 64, "ny": 64}, "seed": 3}"#).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.grid.spacing(), 2.0 / 64.0);
    }

    #[test]
    fn hash_ignores_output_directory() {
        let mut a = RunConfig::default();
        let b = a.clone();
        a.paths.out = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        a.seed = 9;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_VALIDATION);
        assert_eq!(exit_code(&Error::GridMismatch("x".into())), EXIT_VALIDATION);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), EXIT_IO);
        assert_eq!(exit_code(&Error::ConstructionFailed { best_deviation: 1.0, target: 0.1 }), EXIT_STALL);
    }
}
