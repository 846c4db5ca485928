//! With a Gaussian kernel the field across a straight edge is the normal
//! CDF of the depth; comparing the two checks spacing, padding and scale.

use phaselitho::fields::ScalarField;
use phaselitho::imaging::{Imager, OpticsConfig, PsfModel};

fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + puruspe::erf(x / std::f64::consts::SQRT_2))
}

fn main() -> phaselitho::Result<()> {
    let s = 0.1;
    let n = 256;
    let grid = ScalarField::centered(n, 2.0 / n as f64)?;
    let imager = Imager::new(&OpticsConfig::with_scale(s, PsfModel::Gaussian), &grid)?;
    let half = grid.like_fn(|_, y| if y < 0.0 { 1.0 } else { 0.0 });
    let mask = imager.support_mask().zip_map(&half, |a, b| a * b);
    let field = imager.coherent_field(&mask)?;
    let i = n / 2;
    let mut worst: f64 = 0.0;
    println!("{:>10} {:>12} {:>12}", "depth", "field", "normal cdf");
    for j in (n / 2 - 24..n / 2 + 24).step_by(4) {
        let depth = -grid.position(i, j)[1];
        let (v, e) = (field.get(i, j), normal_cdf(depth / s));
        worst = worst.max((v - e).abs());
        println!("{depth:>10.4} {v:>12.6} {e:>12.6}");
    }
    println!("largest deviation {worst:.2e}");
    Ok(())
}
