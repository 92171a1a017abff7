//! Harmonic-class approximation, constant estimates, partitions and the
//! scale-transfer and propagation checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zeroflat::approx::{
    default_scale_grid, degree_separation, estimate_delta, estimate_delta_prime, estimate_delta_prime_with,
    flatness_propagation_check, openness_probe, partition_gamma, scale_transfer_check, theta_class_hd,
    DeltaConfig, OpennessConfig, PropagationStatus,
};
use zeroflat::geometry::sample_zero_set;
use zeroflat::harmonic::random_harmonic_with;
use zeroflat::regularity::{local_flatness, Classification, FlatnessSearch};
use zeroflat::{FlatError, Polynomial};

fn p(s: &str) -> Polynomial {
    s.parse().unwrap()
}

/// Flatness at the origin of `2k` equally spaced rays in the unit disc,
/// minimized over line orientations by a dense sweep.
fn rays_oracle(k: usize) -> f64 {
    let pi = std::f64::consts::PI;
    let rays: Vec<f64> = (0..2 * k).map(|j| pi * j as f64 / k as f64).collect();
    let dist_to_rays = |phi: f64| {
        rays.iter()
            .map(|a| {
                let d = (phi - a).rem_euclid(2.0 * pi);
                let d = d.min(2.0 * pi - d);
                if d <= pi / 2.0 {
                    d.sin()
                } else {
                    1.0
                }
            })
            .fold(f64::INFINITY, f64::min)
    };
    (0..100_000)
        .map(|i| {
            let phi = pi * i as f64 / 100_000.0;
            let side1 = rays.iter().map(|a| (a - phi).sin().abs()).fold(0.0, f64::max);
            let side2 = dist_to_rays(phi).max(dist_to_rays(phi + pi));
            side1.max(side2)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn ray_oracle_values() {
    assert!((rays_oracle(2) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
    assert!((rays_oracle(3) - 3f64.sqrt() / 2.0).abs() < 1e-6);
}

#[test]
fn cross_against_the_harmonic_classes() {
    let res = 0.005;
    let a = sample_zero_set(&p("x0*x1"), &[0.0, 0.0], 1.0, res).unwrap();
    let s1 = theta_class_hd(&a, &[0.0, 0.0], 1.0, 1, 2, 42).unwrap();
    assert!((s1.theta_class - rays_oracle(2)).abs() < 0.02, "{}", s1.theta_class);
    let lf = local_flatness(&a, &[0.0, 0.0], 1.0, FlatnessSearch::Multistart).unwrap().theta;
    assert!((s1.theta_class - lf).abs() <= 1e-3 + 2.0 * res);
    let s2 = theta_class_hd(&a, &[0.0, 0.0], 1.0, 2, 2, 42).unwrap();
    assert!(s2.theta_class <= 3.0 * res, "{:?}", s2.per_degree);
    assert!(s2.best_fit.is_harmonic(1e-9));
    assert!(s2.best_fit.eval(&[0.0, 0.0]).abs() < 1e-12);
    assert!(s2.per_degree.windows(2).all(|w| w[1] <= w[0] + 1e-3));
}

#[test]
fn random_harmonic_fits_itself() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..3 {
        let h = random_harmonic_with(2, 2, true, &mut rng).unwrap();
        let res = 0.01;
        let a = sample_zero_set(&h, &[0.0, 0.0], 1.0, res).unwrap();
        let s = theta_class_hd(&a, &[0.0, 0.0], 1.0, 2, 1, 7).unwrap();
        assert!(s.theta_class <= 3.0 * res, "{:?}", s.per_degree);
        assert!(s.per_degree[1] <= s.per_degree[0] + 1e-3);
    }
}

#[test]
fn harmonic_class_argument_errors() {
    let a = sample_zero_set(&p("x0"), &[0.0, 0.0], 1.0, 0.01).unwrap();
    assert!(matches!(theta_class_hd(&a, &[0.0, 0.0], 1.0, 0, 1, 1), Err(FlatError::OutOfRange { .. })));
    assert!(matches!(theta_class_hd(&a, &[5.0, 5.0], 0.5, 1, 1, 1), Err(FlatError::EmptySet(_))));
    let s = theta_class_hd(&a, &[0.0, 0.0], 1.0, 1, 1, 1).unwrap();
    assert!(s.theta_class <= 2.0 * 0.01);
}

#[test]
fn homogeneous_constants_in_the_plane_match_ray_oracles() {
    let k2 = estimate_delta_prime(2, 2, 12, 42).unwrap();
    assert!((k2.value - rays_oracle(2)).abs() < 0.01, "{}", k2.value);
    assert!(k2.scale_spread() <= 2e-2);
    assert!(k2.minimizer.is_harmonic(1e-9) && k2.minimizer.is_homogeneous());
    let k3 = estimate_delta_prime(2, 3, 12, 42).unwrap();
    assert!((k3.value - rays_oracle(3)).abs() < 0.01, "{}", k3.value);
    assert!(matches!(estimate_delta_prime(2, 1, 1, 1), Err(FlatError::OutOfRange { .. })));
}

#[test]
fn homogeneous_constant_in_space_is_positive() {
    let cfg = DeltaConfig {
        refine_evals: 0,
        ..DeltaConfig::for_dim(3)
    };
    let e = estimate_delta_prime_with(3, 2, 3, 42, &cfg).unwrap();
    assert!(e.value > 0.0 && e.value <= 1.0);
}

#[test]
fn singular_root_constant_in_the_plane() {
    let a = estimate_delta(2, 2, 10, 42).unwrap();
    assert!((a.value - rays_oracle(2)).abs() < 0.02, "{}", a.value);
    let b = estimate_delta(2, 2, 10, 42).unwrap();
    assert_eq!(a, b);
    let dp = estimate_delta_prime(2, 2, 6, 1).unwrap();
    assert!(a.value <= dp.value + 2e-2);
    let h = &a.minimizer;
    assert!(h.gradient_at(&a.witness_root).unwrap().iter().all(|g| g.abs() < 1e-9));
    assert!(matches!(estimate_delta(2, 1, 1, 1), Err(FlatError::OutOfRange { .. })));
}

#[test]
fn cross_partition_agrees_with_the_gradient() {
    let res = 0.004;
    let a = sample_zero_set(&p("x0*x1"), &[0.0, 0.0], 2.0, res).unwrap();
    let grid = default_scale_grid(res, 0.5);
    let delta = rays_oracle(2);
    let out = partition_gamma(&a, 2, 6.0 * delta, delta, &grid).unwrap();
    assert!(out.oracle_agreement.unwrap() >= 0.99, "{:?}", out.oracle_agreement);
    for (z, l) in a.points().zip(&out.labels) {
        if *l == Classification::Singular {
            assert!(z[0].hypot(z[1]) <= 4.0 * res, "{z:?}");
        }
    }
    let csv = out.to_csv(&a);
    assert!(csv.starts_with("x0,x1,label,min_theta,gradient_norm\n"));
    assert_eq!(csv.lines().count(), a.len() + 1);
}

#[test]
fn plane_partition_is_all_flat_and_fine_grids_are_rejected() {
    let res = 0.05;
    let a = sample_zero_set(&p("x0 + x1 - x2"), &[0.0; 3], 1.0, res).unwrap();
    let out = partition_gamma(&a, 1, 4.0, 0.5, &default_scale_grid(res, 0.4)).unwrap();
    assert_eq!(out.flat_fraction, 1.0);
    assert!(matches!(
        partition_gamma(&a, 1, 4.0, 0.5, &[0.1]),
        Err(FlatError::ScaleGridTooFine { .. })
    ));
}

#[test]
fn scale_transfer_holds_on_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut draws = 0;
    while draws < 12 {
        let h = random_harmonic_with(2, rng.random_range(2..=4), true, &mut rng).unwrap();
        let res = 0.005;
        let a = sample_zero_set(&h, &[0.0, 0.0], 1.0, res).unwrap();
        let x = [0.0, 0.0];
        let r = 1.0;
        let s = rng.random_range(0.2..0.6);
        let i = rng.random_range(0..a.len());
        let y = a.point(i).to_vec();
        if y[0].hypot(y[1]) + s * r > r {
            continue;
        }
        let rep = scale_transfer_check(&a, &x, r, &y, s).unwrap();
        assert!(rep.pass, "{rep:?}");
        draws += 1;
    }
}

#[test]
fn scale_transfer_examples() {
    let res = 0.01;
    let a = sample_zero_set(&p("x1"), &[0.0, 0.0], 1.0, res).unwrap();
    let rep = scale_transfer_check(&a, &[0.0, 0.0], 1.0, &[0.3, 0.0], 0.5).unwrap();
    assert!(rep.theta_x <= 2.0 * res && rep.theta_y <= 4.0 * res && rep.pass);
    assert!(matches!(
        scale_transfer_check(&a, &[0.0, 0.0], 1.0, &[0.8, 0.0], 0.5),
        Err(FlatError::ContainmentViolated)
    ));
}

#[test]
fn propagation_examples() {
    let scales = [1.0, 0.5, 0.25, 0.125];
    let rep = flatness_propagation_check(&p("x0*x1"), &[2.0, 0.0], 1.0, 0.05, 0.2, &scales, 0.005).unwrap();
    assert_eq!(rep.status, PropagationStatus::Held);
    let rep = flatness_propagation_check(&p("x0*x1"), &[0.0, 0.0], 1.0, 0.05, 0.2, &scales, 0.005).unwrap();
    assert_eq!(rep.status, PropagationStatus::PremiseFalse);
    assert!((rep.theta_r - rays_oracle(2)).abs() < 0.02);
    let rep = flatness_propagation_check(&p("x0 - 3 x1"), &[0.0, 0.0], 1.0, 0.05, 0.2, &scales, 0.005).unwrap();
    assert_eq!(rep.status, PropagationStatus::Held);
    assert!(rep.curve.iter().all(|c| c.1 <= 0.01));
    assert!(matches!(
        flatness_propagation_check(&p("x0*x1"), &[0.5, 0.5], 1.0, 0.05, 0.2, &scales, 0.005),
        Err(FlatError::NotARoot { .. })
    ));
}

fn openness_config(res: f64) -> OpennessConfig {
    let delta = rays_oracle(2);
    OpennessConfig {
        eta: 6.0 * delta,
        delta,
        root_scales: vec![0.2, 0.1, 0.05],
        relative_resolution: 0.01,
        resolution: res,
    }
}

#[test]
fn openness_examples() {
    let radii = [0.02, 0.05, 0.08, 0.12, 0.2];
    let cfg = openness_config(0.002);
    let rep = openness_probe(&p("x0*x1"), &[2.0, 0.0], &radii, &cfg).unwrap();
    assert!(rep.rows.iter().all(|r| r.all_flat && r.neighbors > 0));
    assert_eq!(rep.flat_radius, 0.2);
    let rep = openness_probe(&p("x0 + x1"), &[0.0, 0.0], &radii, &cfg).unwrap();
    assert_eq!(rep.flat_radius, 0.2);
    let rep = openness_probe(&p("x0*x1"), &[0.1, 0.0], &radii, &cfg).unwrap();
    assert!(rep.flat_radius < 0.1, "{rep:?}");
    assert!(matches!(
        openness_probe(&p("x0*x1"), &[0.0, 0.0], &radii, &cfg),
        Err(FlatError::RootNotFlat)
    ));
}

#[test]
fn degree_separation_is_measured() {
    let d = degree_separation(2, 2, 3, 4, 1, 0.01).unwrap();
    assert!(d > 0.0 && d < 1.0, "{d}");
}
