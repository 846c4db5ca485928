mod common;

use std::f64::consts::PI;

use common::window;
use phaselitho::geometry::Shape;
use phaselitho::phasefield::{
    compute_cp, double_well, limit_perimeter, modica_mortola, modica_mortola_gradient, mollify, optimal_profile,
    profile, profile_derivative, DoubleWell, DoubleWellSpec, Region,
};
use phaselitho::ExtReal;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Composite Simpson on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        acc += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn double_well_values() {
    assert_eq!(double_well(0.0), 0.0);
    assert_eq!(double_well(1.0), 0.0);
    assert!((double_well(0.5) - 9.0 / 16.0).abs() < 1e-15);
    for k in 0..20 {
        let t = k as f64 / 19.0;
        assert!((double_well(t) - double_well(1.0 - t)).abs() < 1e-14);
        if k > 0 && k < 19 {
            assert!(double_well(t) > 0.0);
        }
    }
}

#[test]
fn clamping_never_raises_the_well() {
    for k in 0..200 {
        let t = -2.0 + 5.0 * k as f64 / 199.0;
        assert!(double_well(t.clamp(0.0, 1.0)) <= double_well(t));
    }
}

#[test]
fn cp_examples() {
    assert!((compute_cp(DoubleWell::Standard, 2.0).unwrap() - 2.0).abs() < 1e-8);
    // ∫√(4W) = 1
    assert!((compute_cp(DoubleWell::Scaled { scale: 4.0 }, 2.0).unwrap() - 1.0).abs() < 1e-8);
    for p in [1.5, 3.0, 4.0] {
        // ∫₀¹ (9t²(1-t)²)^e dt = 9^e B(2e+1, 2e+1)
        let e = (p - 1.0) / p;
        let direct = 1.0 / (9f64.powf(e) * puruspe::beta(2.0 * e + 1.0, 2.0 * e + 1.0));
        assert!((compute_cp(DoubleWell::Standard, p).unwrap() - direct).abs() < 1e-8, "p = {p}");
    }
    assert!(compute_cp(DoubleWell::Standard, 1.0).is_err());
    assert!(compute_cp(DoubleWell::Scaled { scale: -1.0 }, 2.0).is_err());
}

#[test]
fn standard_weights_give_the_classical_functional() {
    let spec = DoubleWellSpec::default();
    for eps in [0.01, 0.1, 1.0] {
        let (a, b) = spec.weights(eps);
        assert!((a - 1.0 / eps).abs() < 1e-12 && (b - eps).abs() < 1e-12);
    }
}

#[test]
fn energy_of_zero_is_zero() {
    let u = window(32).zeros_like();
    assert_eq!(modica_mortola(&u, 0.1, &DoubleWellSpec::default()).unwrap(), ExtReal::ZERO);
    assert!(modica_mortola(&u, 0.0, &DoubleWellSpec::default()).is_err());
}

#[test]
fn energy_is_nonnegative_and_infinite_off_the_region() {
    let g = window(48);
    let spec = DoubleWellSpec::default();
    let interior = spec.region.interior_mask(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..5 {
        let u = g.with_values(interior.values().iter().map(|&m| m * rng.gen_range(-0.5..1.5)).collect()).unwrap();
        assert!(modica_mortola(&u, 0.05, &spec).unwrap().unwrap() >= 0.0);
    }
    let mut corner = g.zeros_like();
    corner.set(0, 0, 0.3);
    assert_eq!(modica_mortola(&corner, 0.05, &spec).unwrap(), ExtReal::Infinite);
}

#[test]
fn optimal_profile_along_straight_edges() {
    // a square's edges carry the 1D profile; its corners add O(ε)
    let g = window(256);
    let h = g.spacing();
    let side = 1.0;
    let sdf = Shape::square(0.0, 0.0, side).signed_distance_field(&g);
    let spec = DoubleWellSpec::standard(Region::Rect { center: [0.0, 0.0], half: [0.95, 0.95] });
    let interior = spec.region.interior_mask(&g);
    for cells in [6.0, 8.0] {
        let eps = cells * h;
        let u = mollify(&sdf, eps).zip_map(&interior, |a, b| a * b);
        let p = modica_mortola(&u, eps, &spec).unwrap().unwrap();
        assert!((p - 4.0 * side).abs() / (4.0 * side) < 0.03, "ε = {cells}h: {p}");
    }
}

#[test]
fn sharp_indicator_costs_more_than_its_mollification() {
    let g = window(128);
    let spec = DoubleWellSpec::default();
    let shape = Shape::disk(0.0, 0.0, 0.5);
    for eps in [0.05, 0.1] {
        let sharp = modica_mortola(&shape.rasterize(&g), eps, &spec).unwrap().unwrap();
        let u = mollify(&shape.signed_distance_field(&g), eps).zip_map(&spec.region.interior_mask(&g), |a, b| a * b);
        let smooth = modica_mortola(&u, eps, &spec).unwrap().unwrap();
        assert!(sharp > smooth, "ε = {eps}: {sharp} vs {smooth}");
    }
}

#[test]
fn energy_is_unimodal_in_epsilon_on_a_fixed_profile() {
    let g = window(256);
    let spec = DoubleWellSpec::default();
    let width = 0.05;
    let u = mollify(&Shape::disk(0.0, 0.0, 0.5).signed_distance_field(&g), width)
        .zip_map(&spec.region.interior_mask(&g), |a, b| a * b);
    let eps: Vec<f64> = (0..13).map(|k| width * 2f64.powf((k as f64 - 6.0) / 2.0)).collect();
    let p: Vec<f64> = eps.iter().map(|&e| modica_mortola(&u, e, &spec).unwrap().unwrap()).collect();
    let argmin = (0..p.len()).min_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap()).unwrap();
    assert!(argmin > 0 && argmin + 1 < p.len());
    assert!(p[..=argmin].windows(2).all(|w| w[1] < w[0]));
    assert!(p[argmin..].windows(2).all(|w| w[1] > w[0]));
    assert!((eps[argmin] / width - 1.0).abs() < 0.5);
}

#[test]
fn limit_perimeter_examples() {
    let g = window(256);
    let spec = DoubleWellSpec::default();
    let rho = 0.5;
    let p = limit_perimeter(&Shape::disk(0.0, 0.0, rho).rasterize(&g), &spec).unwrap();
    assert!((p - 2.0 * PI * rho).abs() / (2.0 * PI * rho) < 0.02);
    let mut half = g.zeros_like();
    half.set(128, 128, 0.5);
    assert_eq!(limit_perimeter(&half, &spec), ExtReal::Infinite);
    // the default region is the unit disk; this one sticks out of it
    let straddling = Shape::disk(0.9, 0.0, 0.3).rasterize(&g);
    assert_eq!(limit_perimeter(&straddling, &spec), ExtReal::Infinite);
}

#[test]
fn optimal_profile_examples() {
    let eps = 0.1;
    let q = optimal_profile(eps, 2.0, 0.01).unwrap();
    assert!((q[q.len() / 2] - 0.5).abs() < 1e-15);
    for k in 0..200 {
        let x = -1.0 + k as f64 * 0.01;
        let v = profile(x, eps);
        assert!((eps * profile_derivative(x, eps) - 3.0 * v * (1.0 - v)).abs() < 1e-8);
    }
    // energy per unit length of the transition
    let mut last = f64::INFINITY;
    for eps in [0.2, 0.1, 0.05] {
        let density = |x: f64| double_well(profile(x, eps)) / eps + eps * profile_derivative(x, eps).powi(2);
        let e = simpson(density, -0.9, 0.9, 20000);
        assert!((e - 1.0).abs() <= last);
        last = (e - 1.0).abs();
    }
    assert!(last < 1e-6);
    assert!(optimal_profile(0.0, 1.0, 0.1).is_err());
}

#[test]
fn energy_gradient_matches_finite_differences() {
    let g = window(32);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (p, region) in [(2.0, Region::Inscribed), (3.0, Region::Rect { center: [0.0, 0.0], half: [0.8, 0.8] })] {
        let spec = DoubleWellSpec::new(DoubleWell::Standard, p, region).unwrap();
        let interior = spec.region.interior_mask(&g);
        let u = g.with_values(interior.values().iter().map(|&m| m * rng.gen_range(0.1..0.9)).collect()).unwrap();
        let eps = 0.1;
        let grad = modica_mortola_gradient(&u, eps, &spec).unwrap();
        let t = 1e-6;
        for &(i, j) in &[(16, 16), (10, 20), (21, 9)] {
            let (mut up, mut dn) = (u.clone(), u.clone());
            up.set(i, j, u.get(i, j) + t);
            dn.set(i, j, u.get(i, j) - t);
            let fd = (modica_mortola(&up, eps, &spec).unwrap().unwrap()
                - modica_mortola(&dn, eps, &spec).unwrap().unwrap())
                / (2.0 * t)
                / g.cell_area();
            assert!((fd - grad.get(i, j)).abs() < 1e-5 * (1.0 + fd.abs()), "p = {p}: {fd} vs {}", grad.get(i, j));
        }
    }
}

#[test]
fn gradient_vanishes_at_one_half() {
    let g = window(32);
    let spec = DoubleWellSpec::default();
    let interior = spec.region.interior_mask(&g);
    let u = interior.map(|m| 0.5 * m);
    let grad = modica_mortola_gradient(&u, 0.1, &spec).unwrap();
    // away from the edge of the region only the well term is left
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let [x, y] = g.position(i, j);
            if x.hypot(y) < 0.6 {
                assert!(grad.get(i, j).abs() < 1e-12);
            }
        }
    }
}
