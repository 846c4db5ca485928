mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::{even_dft, normal_cdf, window};
use phaselitho::fields::{convolve, gradient, l1_distance, total_variation};
use phaselitho::geometry::Shape;
use phaselitho::kernels::{
    build_smoothed_psf, gaussian, hankel0, jinc, mutual_intensity, rescale_kernel, KernelSpec, PsfSearch,
    RadialProfile, SampledKernel,
};
use phaselitho::phasefield::mollify;
use phaselitho::ScalarField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn convolving_with_the_delta_is_the_identity() {
    let g = window(32);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = g.with_values((0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let out = convolve(&f, &SampledKernel::delta(g.spacing())).unwrap();
    let err = out.zip_map(&f, |a, b| (a - b).abs()).max();
    assert!(err < 1e-12, "{err}");
}

#[test]
fn gaussian_blur_of_a_half_plane_is_the_normal_cdf() {
    let g = window(256);
    let s = 0.1;
    let k = rescale_kernel(&gaussian(g.spacing(), 8.0).unwrap(), s).unwrap();
    // the half-plane y < 0 ends on a cell edge
    let f = g.like_fn(|_, y| if y < 0.0 { 1.0 } else { 0.0 });
    let out = convolve(&f, &k).unwrap();
    let i = g.nx() / 2;
    for target in [-s, 0.0, s] {
        // nearest cell centre to depth `target` below the edge
        let j = (0..g.ny()).min_by(|&a, &b| {
            let da = (-g.position(i, a)[1] - target).abs();
            let db = (-g.position(i, b)[1] - target).abs();
            da.partial_cmp(&db).unwrap()
        });
        let j = j.unwrap();
        let depth = -g.position(i, j)[1];
        let expected = normal_cdf(depth / s);
        assert!((out.get(i, j) - expected).abs() < 1e-3, "depth {depth}: {} vs {expected}", out.get(i, j));
    }
}

#[test]
fn convolution_multiplies_masses() {
    let g = window(128);
    let f = Shape::disk(0.1, -0.05, 0.2).rasterize(&g);
    let k = rescale_kernel(&gaussian(g.spacing(), 8.0).unwrap(), 0.05).unwrap();
    let out = convolve(&f, &k).unwrap();
    let expected = f.integral() * k.mass();
    assert!((out.integral() - expected).abs() / expected < 1e-6);
}

#[test]
fn unit_rescale_keeps_samples() {
    let k = gaussian(0.1, 8.0).unwrap();
    let r = rescale_kernel(&k, 1.0).unwrap();
    assert_eq!(k.grid().values(), r.grid().values());
}

#[test]
fn rescaling_preserves_the_l1_norm() {
    let k = gaussian(0.05, 8.0).unwrap();
    for s in [0.5, 2.0, 3.0] {
        let r = rescale_kernel(&k, s).unwrap();
        assert!((r.grid_l1() - k.grid_l1()).abs() / k.grid_l1() < 1e-6, "s = {s}");
        assert_eq!(r.l1_norm(), k.l1_norm());
    }
}

#[test]
fn rescaled_gaussian_spectrum() {
    let s = 0.7;
    let k = rescale_kernel(&gaussian(0.05, 8.0).unwrap(), s).unwrap();
    for &xi in &[0.0, 0.5, 1.3, 2.9, 4.1] {
        let got = even_dft(k.grid(), [xi * 0.6, xi * 0.8]);
        let expected = (-s * s * xi * xi / 2.0).exp();
        assert!((got - expected).abs() < 1e-6, "ξ = {xi}: {got} vs {expected}");
    }
}

#[test]
fn total_variation_of_constants_vanishes() {
    assert_eq!(total_variation(&window(16).like_fn(|_, _| 3.5)), 0.0);
}

#[test]
fn total_variation_of_a_ramp_is_its_length() {
    let g = window(128);
    let f = g.like_fn(|x, _| (x + 0.5).clamp(0.0, 1.0));
    let tv = total_variation(&f);
    assert!((tv - 2.0).abs() / 2.0 < 0.02, "{tv}");
}

#[test]
fn total_variation_of_a_smoothed_disk_is_its_perimeter() {
    let g = window(256);
    let rho = 0.5;
    let f = mollify(&Shape::disk(0.0, 0.0, rho).signed_distance_field(&g), 0.03);
    let tv = total_variation(&f);
    assert!((tv - 2.0 * PI * rho).abs() / (2.0 * PI * rho) < 0.03, "{tv}");
}

#[test]
fn gradient_of_constants_and_linear_fields() {
    let g = window(24);
    let (gx, gy) = gradient(&g.like_fn(|_, _| 2.0));
    assert_eq!(gx.max_abs(), 0.0);
    assert_eq!(gy.max_abs(), 0.0);
    let (gx, gy) = gradient(&g.like_fn(|x, _| x));
    for j in 1..g.ny() - 1 {
        for i in 1..g.nx() - 1 {
            assert!((gx.get(i, j) - 1.0).abs() < 1e-10);
            assert!(gy.get(i, j).abs() < 1e-10);
        }
    }
}

#[test]
fn gradient_of_a_gaussian_is_second_order() {
    let s = 0.3;
    let gauss = |x: f64, y: f64| (-(x * x + y * y) / (2.0 * s * s)).exp();
    let mut errs = Vec::new();
    for n in [64, 128] {
        let g = window(n);
        let (gx, gy) = gradient(&g.like_fn(gauss));
        let mut worst: f64 = 0.0;
        for &(i, j) in &[(n / 2, n / 2), (n / 3, n / 2), (n / 2, 2 * n / 3), (n / 4, n / 3), (3 * n / 5, 2 * n / 5)] {
            let [x, y] = g.position(i, j);
            let v = gauss(x, y);
            worst = worst.max((gx.get(i, j) + x / (s * s) * v).abs()).max((gy.get(i, j) + y / (s * s) * v).abs());
        }
        errs.push(worst);
    }
    // halving the spacing cuts the error by about four
    assert!(errs[0] < 1e-2, "{errs:?}");
    assert!(errs[1] < errs[0] / 3.5, "{errs:?}");
}

#[test]
fn l1_distance_examples() {
    let g = window(64);
    let a = Shape::rect(-0.5, 0.0, 0.5, 0.5).rasterize(&g);
    let b = Shape::rect(0.5, 0.0, 0.5, 0.5).rasterize(&g);
    assert_eq!(l1_distance(&a, &a).unwrap(), 0.0);
    assert!((l1_distance(&a, &b).unwrap() - 2.0).abs() < 1e-12);

    let g = window(256);
    let (r1, r2) = (0.3, 0.6);
    let d = l1_distance(&Shape::disk(0.0, 0.0, r1).rasterize(&g), &Shape::disk(0.0, 0.0, r2).rasterize(&g)).unwrap();
    let exact = PI * (r2 * r2 - r1 * r1);
    assert!((d - exact).abs() / exact < 0.02);
}

#[test]
fn l1_distance_rejects_mismatched_grids() {
    assert!(l1_distance(&window(16), &window(32)).is_err());
}

#[test]
fn unit_gaussian_value_mass_and_spectrum() {
    let k = gaussian(0.1, 8.0).unwrap();
    assert!((k.value_at(0.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
    assert!((k.mass() - 1.0).abs() < 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let xi: [f64; 2] = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let expected = (-(xi[0] * xi[0] + xi[1] * xi[1]) / 2.0).exp();
        assert!((even_dft(k.grid(), xi) - expected).abs() < 1e-4);
    }
}

#[test]
fn gaussian_needs_eight_standard_deviations() {
    assert!(gaussian(0.1, 4.0).is_err());
}

#[test]
fn jinc_at_the_origin() {
    let k = jinc(0.1, 10.0).unwrap();
    assert!((k.value_at(0.0) - 1.0 / (4.0 * PI)).abs() < 1e-15);
    assert!(!k.is_decayed());
}

#[test]
fn imaging_jinc_peak_scales_with_the_aperture() {
    use phaselitho::imaging::{Imager, OpticsConfig, PsfModel};
    let mut cfg = OpticsConfig::with_scale(1.0, PsfModel::Jinc);
    cfg.k = 20.0;
    cfg.na = 0.8;
    let im = Imager::new(&cfg, &window(64)).unwrap();
    let expected = (cfg.k * cfg.na).powi(2) / (4.0 * PI);
    assert!((im.kernel().value_at(0.0) - expected).abs() < 1e-12);
}

fn psf() -> Arc<phaselitho::kernels::SmoothedPsf> {
    phaselitho::kernels::smoothed_psf_cached(0.05, &PsfSearch::default()).unwrap()
}

#[test]
fn smoothed_psf_has_unit_mass_and_flat_spectrum() {
    let p = psf();
    assert_eq!(p.t_tilde_hat(0.0), 1.0);
    for k in 0..=100 {
        assert_eq!(p.t_tilde_hat(k as f64 / 100.0), 1.0);
    }
    assert!(p.unit_deviation() <= 0.05);
    // T̂ ≡ 1 on B_{s0}
    let t = p.sample_t(0.5, f64::INFINITY).unwrap();
    for k in 0..=10 {
        assert_eq!(t.spectrum_at(p.s0() * k as f64 / 10.0), 1.0);
    }
}

#[test]
fn smoothed_psf_spectrum_is_compactly_supported() {
    let p = psf();
    for k in 0..200 {
        let rho = p.b() + 1.0 + k as f64 * 0.37;
        assert!(p.t_tilde_hat(rho).abs() < 1e-8);
    }
    let s = 0.8;
    let k = p.kernel(s, 0.01, 0.5).unwrap();
    assert!(k.spectrum_at((p.b() + 1.0) / s).abs() < 1e-8);
}

#[test]
fn smoothed_psf_rejects_bad_targets() {
    assert!(build_smoothed_psf(0.0, &PsfSearch::default()).is_err());
    assert!(build_smoothed_psf(f64::NAN, &PsfSearch::default()).is_err());
    let tiny = PsfSearch { max_halvings: 1, b0_values: vec![2.0] };
    assert!(matches!(build_smoothed_psf(1e-9, &tiny), Err(phaselitho::Error::ConstructionFailed { .. })));
}

#[test]
fn mutual_intensity_examples() {
    let j = mutual_intensity(2.0, 0.05, 3.0).unwrap();
    assert_eq!(j.value_at(0.0), 1.0);
    assert!(j.grid().values().iter().all(|v| v.abs() <= 1.0 + 1e-15));

    // sup |J - 1| over |x| ≤ 2R shrinks as kσNA halves
    let r = 0.5;
    let defect = |c: f64| {
        let j = mutual_intensity(c, 0.01, 2.0 * r + 0.01).unwrap();
        let g = j.grid();
        (0..g.len())
            .filter(|&k| {
                let [x, y] = g.position_of(k);
                x.hypot(y) <= 2.0 * r
            })
            .map(|k| (g.values()[k] - 1.0).abs())
            .fold(0.0, f64::max)
    };
    let d: Vec<f64> = [4.0, 2.0, 1.0, 0.5].iter().map(|&c| defect(c)).collect();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
}

#[test]
fn hankel_transform_of_the_gaussian() {
    let p = RadialProfile::from_fn(0.01, 1001, |r: f64| (-r * r / 2.0).exp() / (2.0 * PI));
    let h = hankel0(&p, 0.05, 100);
    for k in 0..h.len() {
        let rho = h.radius(k);
        assert!((h.values[k] - (-rho * rho / 2.0).exp()).abs() < 1e-4, "ρ = {rho}");
    }
}

#[test]
fn hankel_transform_matches_the_2d_dft() {
    let k = KernelSpec::Gaussian { s: 1.3 }.sample(0.1, 20.0).unwrap();
    let h = hankel0(&k.radial_profile(0.01, 1100), 0.25, 10);
    for j in 0..h.len() {
        let rho = h.radius(j);
        let dft = even_dft(k.grid(), [rho, 0.0]);
        assert!((h.values[j] - dft).abs() < 1e-3, "ρ = {rho}: {} vs {dft}", h.values[j]);
    }
}

#[test]
fn hankel_transform_of_zero() {
    let h = hankel0(&RadialProfile::from_fn(0.1, 50, |_| 0.0), 0.1, 30);
    assert!(h.values.iter().all(|&v| v == 0.0));
}

#[test]
fn kernels_are_radially_symmetric() {
    let p = psf();
    let kernels: Vec<SampledKernel> = vec![
        gaussian(0.1, 8.0).unwrap(),
        jinc(0.1, 4.0).unwrap(),
        p.kernel(0.5, 0.01, 0.3).unwrap(),
        mutual_intensity(1.5, 0.1, 3.0).unwrap(),
    ];
    for k in &kernels {
        let g = k.grid();
        let m = (g.nx() - 1) / 2;
        // (3, 4), (4, 3), (5, 0) and (0, 5) all lie at radius 5 cells
        let ring = [
            g.get(m + 3, m + 4),
            g.get(m + 4, m - 3),
            g.get(m - 5, m),
            g.get(m, m + 5),
            g.get(m - 3, m - 4),
        ];
        for v in ring {
            assert!((v - ring[0]).abs() < 1e-9, "{:?}: {ring:?}", k.kind());
        }
    }
}

#[test]
fn kernel_specs_validate() {
    assert!(KernelSpec::Gaussian { s: -1.0 }.validate().is_err());
    assert!(KernelSpec::Jinc { s: 0.0 }.validate().is_err());
    assert!(KernelSpec::SmoothedPsf { s: 1.0, delta: 0.0 }.validate().is_err());
    assert!(KernelSpec::MutualIntensity { k_sigma_na: f64::INFINITY }.validate().is_err());
    assert!(KernelSpec::Gaussian { s: 1.0 }.validate().is_ok());
}

#[test]
fn fields_reject_degenerate_grids() {
    assert!(ScalarField::zeros(1, 4, 0.1, [0.0, 0.0]).is_err());
    assert!(ScalarField::zeros(4, 4, 0.0, [0.0, 0.0]).is_err());
    assert!(ScalarField::from_vec(2, 2, 0.1, [0.0, 0.0], vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
}
