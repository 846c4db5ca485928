#![allow(dead_code)]

use phaselitho::imaging::{Imager, OpticsConfig, PsfModel};
use phaselitho::ScalarField;

/// The `[-1, 1]²` window at `n × n` cells.
pub fn window(n: usize) -> ScalarField {
    ScalarField::centered(n, 2.0 / n as f64).unwrap()
}

pub fn imager(n: usize, s: f64, psf: PsfModel) -> Imager {
    Imager::new(&OpticsConfig::with_scale(s, psf), &window(n)).unwrap()
}

/// Standard normal CDF by composite Simpson quadrature of the density.
pub fn normal_cdf(x: f64) -> f64 {
    let a = -12.0;
    if x <= a {
        return 0.0;
    }
    let n = 4000;
    let h = (x - a) / n as f64;
    let pdf = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = pdf(a) + pdf(x);
    for k in 1..n {
        acc += pdf(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Brute-force DFT `Σ f(x) cos(ξ·x) h²` of an even field.
pub fn even_dft(f: &ScalarField, xi: [f64; 2]) -> f64 {
    let mut acc = 0.0;
    for j in 0..f.ny() {
        for i in 0..f.nx() {
            let [x, y] = f.position(i, j);
            acc += f.get(i, j) * (xi[0] * x + xi[1] * y).cos();
        }
    }
    acc * f.cell_area()
}
