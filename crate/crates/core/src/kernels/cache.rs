//! On-disk cache for smoothed PSF constructions: a JSON header plus the
//! tabulated deviation profile as CSV.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::hankel::RadialProfile;
use super::psf::{PsfSearch, PsfTrial, SmoothedPsf};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsfCacheHeader {
    pub kind: String,
    /// Hash of the construction parameters; the cache key.
    pub params_hash: String,
    pub target_deviation: f64,
    pub search: PsfSearch,
    pub s0: f64,
    pub b0: f64,
    pub b: f64,
    /// Achieved bound on `‖T̃ - G_{s₀}‖_{W^{1,1}}`.
    pub achieved_deviation: f64,
    /// The same bound for the unscaled pair, `‖T - G‖_{W^{1,1}}`.
    pub achieved_unit_deviation: f64,
    pub deviation_l1: f64,
    pub deviation_grad: f64,
    pub l1_norm: f64,
    pub support: f64,
    pub trials: Vec<PsfTrial>,
    pub profile_csv: String,
    pub band_csv: Option<String>,
}

pub fn params_hash(delta: f64, search: &PsfSearch) -> String {
    let canonical = serde_json::json!({ "kind": "smoothed_psf", "delta": delta, "search": search });
    let digest = Sha256::digest(canonical.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn header_path(dir: &Path, hash: &str) -> PathBuf {
    dir.join(format!("smoothed_psf_{}.json", &hash[..16]))
}

fn write_profile(path: &Path, column: &str, p: &RadialProfile) -> Result<()> {
    let mut out = format!("r,{column}\n");
    for (k, v) in p.values.iter().enumerate() {
        out.push_str(&format!("{:e},{:e}\n", p.radius(k), v));
    }
    fs::write(path, out)?;
    Ok(())
}

fn read_profile(path: &Path) -> Result<RadialProfile> {
    let text = fs::read_to_string(path)?;
    let mut rs = Vec::new();
    let mut vs = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let mut it = line.split(',');
        let mut next = || {
            it.next()
                .and_then(|t| t.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Parse(format!("{}: bad row {line:?}", path.display())))
        };
        rs.push(next()?);
        vs.push(next()?);
    }
    if rs.len() < 2 {
        return Err(Error::Parse(format!("{}: too few samples", path.display())));
    }
    Ok(RadialProfile { dr: rs[1] - rs[0], values: vs })
}

/// Writes the header and profile files into `dir`; returns the header path.
pub fn store_psf(dir: &Path, psf: &SmoothedPsf, search: &PsfSearch) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let hash = params_hash(psf.target(), search);
    let short = &hash[..16];
    let profile_csv = format!("smoothed_psf_{short}.csv");
    write_profile(&dir.join(&profile_csv), "d_low", &psf.low)?;
    let band_csv = match &psf.tail {
        Some(t) => {
            let name = format!("smoothed_psf_{short}_band.csv");
            write_profile(&dir.join(&name), "d_band", t)?;
            Some(name)
        }
        None => None,
    };
    let header = PsfCacheHeader {
        kind: "smoothed_psf".into(),
        params_hash: hash.clone(),
        target_deviation: psf.target(),
        search: search.clone(),
        s0: psf.s0(),
        b0: psf.b0(),
        b: psf.b(),
        achieved_deviation: psf.deviation(),
        achieved_unit_deviation: psf.unit_deviation(),
        deviation_l1: psf.deviation_l1,
        deviation_grad: psf.deviation_grad,
        l1_norm: psf.l1_norm(),
        support: psf.support(),
        trials: psf.trials().to_vec(),
        profile_csv,
        band_csv,
    };
    let path = header_path(dir, &hash);
    fs::write(&path, serde_json::to_string_pretty(&header)?)?;
    Ok(path)
}

/// Loads a cached construction for these parameters, if one exists in `dir`.
pub fn load_cached_psf(dir: &Path, delta: f64, search: &PsfSearch) -> Result<Option<(PsfCacheHeader, SmoothedPsf)>> {
    let hash = params_hash(delta, search);
    let path = header_path(dir, &hash);
    if !path.exists() {
        return Ok(None);
    }
    let header: PsfCacheHeader = serde_json::from_str(&fs::read_to_string(&path)?)?;
    if header.params_hash != hash {
        return Ok(None);
    }
    let low = read_profile(&dir.join(&header.profile_csv))?;
    let tail = match &header.band_csv {
        Some(name) => Some(read_profile(&dir.join(name))?),
        None => None,
    };
    let psf = SmoothedPsf::assemble(
        header.target_deviation,
        header.s0,
        header.b0,
        header.deviation_l1,
        header.deviation_grad,
        low,
        tail,
        header.trials.clone(),
    );
    Ok(Some((header, psf)))
}
