//! The pattern distances on three pairs: concentric disks, a disk against
//! the square of the same area, and a rectangle against a fine comb, whose
//! area difference vanishes while the perimeter gap does not.

use std::f64::consts::PI;

use phaselitho::fields::ScalarField;
use phaselitho::geometry::{comb, strict_distance, Shape};

fn main() -> phaselitho::Result<()> {
    let n = 256;
    let grid = ScalarField::centered(n, 2.0 / n as f64)?;
    let h = grid.spacing();
    let rho = 0.5;
    let pairs = [
        ("concentric disks", Shape::disk(0.0, 0.0, rho), Shape::disk(0.0, 0.0, rho + 0.05)),
        ("disk vs square", Shape::disk(0.0, 0.0, rho), Shape::square(0.0, 0.0, rho * PI.sqrt())),
        ("rect vs comb", Shape::rect(0.0, 0.0, 0.6, 0.4), comb(0.6, 0.4, 4, 0.6, 4.0 * 0.6 * 2.0 * h)),
    ];
    println!("{:<18} {}", "pair", "d1,d1_tilde,d2,d3,perimeter_a,perimeter_b");
    for (name, a, b) in pairs {
        let r = strict_distance(&a.pattern(&grid), &b.pattern(&grid))?;
        println!("{name:<18} {}", r.csv_row());
    }
    Ok(())
}
