//! File formats for fields and patterns.
//!
//! Images are stored with the first row at the top, i.e. at the largest `y`,
//! so that a field viewed in an image viewer has its `y` axis pointing up.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BinaryPattern, Polyline, ScalarField};
use crate::error::{Error, Result};

/// Metadata written next to every PGM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub origin: [f64; 2],
    /// Value mapped to gray level 0.
    pub min: f64,
    /// Value mapped to the maximal gray level.
    pub max: f64,
    pub config_hash: Option<String>,
}

/// `foo.pgm` -> `foo.pgm.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn write_pgm_raw(path: &Path, nx: usize, ny: usize, maxval: u16, levels: &[u16]) -> Result<()> {
    let mut buf = Vec::with_capacity(32 + levels.len() * 2);
    write!(buf, "P5\n{nx} {ny}\n{maxval}\n")?;
    for r in 0..ny {
        let j = ny - 1 - r;
        for i in 0..nx {
            let v = levels[j * nx + i];
            if maxval > 255 {
                buf.extend_from_slice(&v.to_be_bytes());
            } else {
                buf.push(v as u8);
            }
        }
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Raw PGM contents: dimensions, maximal gray level and levels in field order.
pub struct Pgm {
    pub nx: usize,
    pub ny: usize,
    pub maxval: u16,
    pub levels: Vec<u16>,
}

pub fn read_pgm(path: &Path) -> Result<Pgm> {
    let bytes = fs::read(path)?;
    let mut pos = 0;
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse(format!("{}: truncated PGM header", path.display())));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1; // single whitespace byte after maxval
    if tokens[0] != "P5" {
        return Err(Error::Parse(format!("{}: not a binary PGM (magic {:?})", path.display(), tokens[0])));
    }
    let parse = |t: &str| t.parse::<usize>().map_err(|_| Error::Parse(format!("{}: bad PGM header field {t:?}", path.display())));
    let (nx, ny, maxval) = (parse(&tokens[1])?, parse(&tokens[2])?, parse(&tokens[3])?);
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Parse(format!("{}: maxval {maxval} out of range", path.display())));
    }
    let bpp = if maxval > 255 { 2 } else { 1 };
    let data = &bytes[pos.min(bytes.len())..];
    if data.len() < nx * ny * bpp {
        return Err(Error::Parse(format!("{}: expected {} data bytes, found {}", path.display(), nx * ny * bpp, data.len())));
    }
    let mut levels = vec![0u16; nx * ny];
    for r in 0..ny {
        let j = ny - 1 - r;
        for i in 0..nx {
            let k = r * nx + i;
            levels[j * nx + i] =
                if bpp == 2 { u16::from_be_bytes([data[2 * k], data[2 * k + 1]]) } else { data[k] as u16 };
        }
    }
    Ok(Pgm { nx, ny, maxval: maxval as u16, levels })
}

/// Writes `f` as a 16-bit PGM, values mapped linearly from `[min, max]`,
/// and the sidecar JSON next to it.
pub fn write_pgm16(path: &Path, f: &ScalarField, config_hash: Option<&str>) -> Result<()> {
    let (lo, hi) = (f.min(), f.max());
    let range = hi - lo;
    let levels: Vec<u16> = f
        .values()
        .iter()
        .map(|&v| if range > 0.0 { ((v - lo) / range * 65535.0).round() as u16 } else { 0 })
        .collect();
    write_pgm_raw(path, f.nx(), f.ny(), 65535, &levels)?;
    let side = Sidecar {
        nx: f.nx(),
        ny: f.ny(),
        spacing: f.spacing(),
        origin: f.origin(),
        min: lo,
        max: hi,
        config_hash: config_hash.map(str::to_owned),
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

/// Reads a PGM written by [`write_pgm16`]; values are restored from the
/// sidecar range (quantized to 16 bits).
pub fn read_pgm16(path: &Path) -> Result<ScalarField> {
    let pgm = read_pgm(path)?;
    let side: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    if side.nx != pgm.nx || side.ny != pgm.ny {
        return Err(Error::Parse(format!("{}: sidecar dimensions disagree with image", path.display())));
    }
    let scale = (side.max - side.min) / pgm.maxval as f64;
    let values = pgm.levels.iter().map(|&l| side.min + l as f64 * scale).collect();
    ScalarField::from_vec(pgm.nx, pgm.ny, side.spacing, side.origin, values)
}

/// Writes the bitmap of `p` as a PGM with maxval 1, plus a sidecar.
pub fn write_bitmap_pgm(path: &Path, p: &BinaryPattern, config_hash: Option<&str>) -> Result<()> {
    let g = p.grid();
    let levels: Vec<u16> = g.values().iter().map(|&v| v as u16).collect();
    write_pgm_raw(path, g.nx(), g.ny(), 1, &levels)?;
    let side = Sidecar {
        nx: g.nx(),
        ny: g.ny(),
        spacing: g.spacing(),
        origin: g.origin(),
        min: 0.0,
        max: 1.0,
        config_hash: config_hash.map(str::to_owned),
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ContourFile {
    spacing: f64,
    contours: Vec<Polyline>,
}

pub fn write_contours_json(path: &Path, p: &BinaryPattern) -> Result<()> {
    let doc = ContourFile { spacing: p.grid().spacing(), contours: p.contours().to_vec() };
    fs::write(path, serde_json::to_string(&doc)?)?;
    Ok(())
}

pub fn read_contours_json(path: &Path) -> Result<Vec<Polyline>> {
    let doc: ContourFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(doc.contours)
}

/// Reads a grayscale image (PGM of any depth, or PNG) as values in `[0, 1]`
/// placed on `grid`, whose dimensions must match the image.
pub fn read_image_on(path: &Path, grid: &ScalarField) -> Result<ScalarField> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let (nx, ny, values) = if ext == "png" {
        let img = image::open(path)?.into_luma16();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let mut values = vec![0.0; w * h];
        for (x, y, px) in img.enumerate_pixels() {
            let j = h - 1 - y as usize;
            values[j * w + x as usize] = px.0[0] as f64 / 65535.0;
        }
        (w, h, values)
    } else {
        let pgm = read_pgm(path)?;
        let values = pgm.levels.iter().map(|&l| l as f64 / pgm.maxval as f64).collect();
        (pgm.nx, pgm.ny, values)
    };
    if nx != grid.nx() || ny != grid.ny() {
        return Err(Error::GridMismatch(format!(
            "{}: image is {nx}x{ny}, configured grid is {}x{}",
            path.display(),
            grid.nx(),
            grid.ny()
        )));
    }
    grid.with_values(values)
}

/// Raw text dump: a header line, the header values, then one line per row
/// (row `j = 0` first), comma separated.
pub fn write_csv(path: &Path, f: &ScalarField) -> Result<()> {
    let mut out = String::new();
    out.push_str("nx,ny,spacing,origin_x,origin_y\n");
    let o = f.origin();
    out.push_str(&format!("{},{},{:e},{:e},{:e}\n", f.nx(), f.ny(), f.spacing(), o[0], o[1]));
    for row in f.values().chunks(f.nx()) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<ScalarField> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let bad = |what: &str| Error::Parse(format!("{}: {what}", path.display()));
    if lines.next().map(str::trim) != Some("nx,ny,spacing,origin_x,origin_y") {
        return Err(bad("missing header"));
    }
    let head: Vec<&str> = lines.next().ok_or_else(|| bad("missing header values"))?.split(',').collect();
    if head.len() != 5 {
        return Err(bad("header needs five values"));
    }
    let nx: usize = head[0].trim().parse().map_err(|_| bad("bad nx"))?;
    let ny: usize = head[1].trim().parse().map_err(|_| bad("bad ny"))?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("bad number {s:?}")));
    let (spacing, ox, oy) = (num(head[2])?, num(head[3])?, num(head[4])?);
    let mut values = Vec::with_capacity(nx * ny);
    for line in lines.filter(|l| !l.trim().is_empty()) {
        for tok in line.split(',') {
            values.push(num(tok)?);
        }
    }
    if values.len() != nx * ny {
        return Err(bad(&format!("expected {} values, found {}", nx * ny, values.len())));
    }
    ScalarField::from_vec(nx, ny, spacing, [ox, oy], values)
}
