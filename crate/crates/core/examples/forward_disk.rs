//! Images a disk and a pair of disks, writing intensity and printed pattern
//! to the directory given as the first argument (default `forward_out`).

use std::path::PathBuf;

use phaselitho::fields::io::{write_bitmap_pgm, write_pgm16};
use phaselitho::fields::ScalarField;
use phaselitho::geometry::{components, perimeter, Shape};
use phaselitho::imaging::{Imager, OpticsConfig, PsfModel};

fn main() -> phaselitho::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "forward_out".into()));
    std::fs::create_dir_all(&out)?;
    let n = 128;
    let grid = ScalarField::centered(n, 2.0 / n as f64)?;
    let imager = Imager::new(&OpticsConfig::with_scale(0.5, PsfModel::default()), &grid)?;

    let shapes = [
        ("disk", Shape::disk(0.0, 0.0, 0.4)),
        ("pair", Shape::Union { parts: vec![Shape::disk(-0.35, 0.0, 0.2), Shape::disk(0.35, 0.0, 0.2)] }),
    ];
    for (name, shape) in shapes {
        let mask = shape.rasterize(&grid);
        let intensity = imager.intensity(&mask)?;
        let printed = imager.exposed(&mask)?;
        write_pgm16(&out.join(format!("{name}_intensity.pgm")), &intensity, None)?;
        write_bitmap_pgm(&out.join(format!("{name}_printed.pgm")), &printed, None)?;
        println!(
            "{name}: max intensity {:.4}, printed area {:.4} (mask {:.4}), perimeter {:.4}, components {}",
            intensity.max(),
            printed.area(),
            mask.integral(),
            perimeter(&printed),
            components(&printed)
        );
    }
    println!("images in {}", out.display());
    Ok(())
}
