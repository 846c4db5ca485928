//! Drives the command layer behind the binary from code: a forward run and a
//! metrics run on polygon files, each leaving a manifest in its directory.

use std::path::PathBuf;

use phaselitho::cli::{cmd_forward, cmd_metrics, Overrides, RunConfig};

fn main() -> phaselitho::Result<()> {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "commands_out".into()));
    std::fs::create_dir_all(&root)?;
    let disk = root.join("disk.json");
    let square = root.join("square.json");
    std::fs::write(&disk, r#"{"shape": "disk", "center": [0.0, 0.0], "radius": 0.4}"#)?;
    std::fs::write(&square, r#"{"rings": [[[-0.35, -0.35], [0.35, -0.35], [0.35, 0.35], [-0.35, 0.35]]]}"#)?;

    let cfg = RunConfig::from_json(r#"{"grid": {"nx": 96, "ny": 96}}"#)?;
    println!("config hash {}", cfg.hash());

    let mut forward = cfg.clone();
    forward.paths.mask = Some(disk.clone());
    let ov = Overrides { out: Some(root.join("forward")), ..Default::default() };
    let done = cmd_forward(forward, &ov)?;
    println!("forward: {} ({} files)", done.message, done.outputs.len());

    let mut metrics = cfg;
    metrics.paths.pattern_a = Some(disk);
    metrics.paths.pattern_b = Some(square);
    let ov = Overrides { out: Some(root.join("metrics")), ..Default::default() };
    println!("metrics: {}", cmd_metrics(metrics, &ov)?.message);
    Ok(())
}
