//! The Modica–Mortola energy of a mollified disk approaches its perimeter as
//! the interface width shrinks, down to a few cells.

use std::f64::consts::PI;

use phaselitho::fields::ScalarField;
use phaselitho::geometry::Shape;
use phaselitho::phasefield::{limit_perimeter, modica_mortola, mollify, DoubleWellSpec};

fn main() -> phaselitho::Result<()> {
    let n = 256;
    let grid = ScalarField::centered(n, 2.0 / n as f64)?;
    let spec = DoubleWellSpec::default();
    let rho = 0.5;
    let shape = Shape::disk(0.0, 0.0, rho);
    let sdf = shape.signed_distance_field(&grid);
    let interior = spec.region.interior_mask(&grid);
    let exact = 2.0 * PI * rho;
    println!("perimeter {exact:.6}, sharp estimate {}", limit_perimeter(&shape.rasterize(&grid), &spec));
    println!("{:>10} {:>12} {:>10}", "eps/h", "P_eps", "rel err");
    for cells in [32.0, 16.0, 8.0, 4.0] {
        let eps = cells * grid.spacing();
        let u = mollify(&sdf, eps).zip_map(&interior, |a, m| a * m);
        let p = modica_mortola(&u, eps, &spec)?.unwrap();
        println!("{cells:>10} {p:>12.6} {:>10.2e}", (p - exact) / exact);
    }
    Ok(())
}
