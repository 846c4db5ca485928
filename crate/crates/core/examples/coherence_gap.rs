//! Partially coherent imaging approaches the coherent model as the source
//! shrinks: the sup-norm gap between the two intensities against its bound.

use phaselitho::fields::ScalarField;
use phaselitho::geometry::Shape;
use phaselitho::imaging::{Imager, OpticsConfig, PsfModel};

fn main() -> phaselitho::Result<()> {
    let grid = ScalarField::centered(48, 2.0 / 48.0)?;
    let mask = Shape::square(0.0, 0.0, 0.6).rasterize(&grid);
    println!("{:>8} {:>12} {:>12}", "sigma", "gap", "bound");
    for sigma in [1.0, 0.5, 0.25, 0.125] {
        let mut cfg = OpticsConfig::with_scale(1.0, PsfModel::default());
        cfg.sigma = Some(sigma);
        let imager = Imager::new(&cfg, &grid)?;
        let (gap, bound) = imager.coherence_gap(&mask)?;
        println!("{sigma:>8} {gap:>12.3e} {bound:>12.3e}");
    }
    Ok(())
}
