//! Zero-set sampling, Hausdorff distances and blow-ups against direct oracles.

use proptest::prelude::*;
use zeroflat::geometry::{
    blowup_sequence, hausdorff_distance, hyperplane_disc, sample_zero_set,
    verify_coefficient_vs_set_convergence, ConvergenceFixture, Hyperplane, SampledSet,
};
use zeroflat::Polynomial;

fn brute_hd(a: &[f64], b: &[f64], n: usize) -> f64 {
    let directed = |x: &[f64], y: &[f64]| {
        x.chunks(n)
            .map(|p| {
                y.chunks(n)
                    .map(|q| p.iter().zip(q).map(|(s, t)| (s - t) * (s - t)).sum::<f64>())
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            })
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

fn cloud(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n..=40 * n).prop_map(move |mut v| {
        v.truncate(v.len() / n * n);
        v
    })
}

fn set(n: usize, pts: &[f64]) -> SampledSet {
    SampledSet::from_points(n, pts, &vec![0.0; n], 10.0, 0.01).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hausdorff_matches_brute_force(a in cloud(2), b in cloud(2)) {
        let hd = hausdorff_distance(&set(2, &a), &set(2, &b)).unwrap();
        prop_assert!((hd - brute_hd(&a, &b, 2)).abs() < 1e-12);
    }

    #[test]
    fn hausdorff_is_a_metric_on_clouds(a in cloud(3), b in cloud(3), c in cloud(3)) {
        let (sa, sb, sc) = (set(3, &a), set(3, &b), set(3, &c));
        let ab = hausdorff_distance(&sa, &sb).unwrap();
        let ba = hausdorff_distance(&sb, &sa).unwrap();
        let ac = hausdorff_distance(&sa, &sc).unwrap();
        let cb = hausdorff_distance(&sc, &sb).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!(ab <= ac + cb + 1e-12);
        prop_assert_eq!(hausdorff_distance(&sa, &sa).unwrap(), 0.0);
    }
}

#[test]
fn circle_samples_are_roots_and_cover_the_circle() {
    let p: Polynomial = "x0^2 + x1^2 - 0.25".parse().unwrap();
    let res = 0.01;
    let s = sample_zero_set(&p, &[0.0, 0.0], 1.0, res).unwrap();
    for z in s.points() {
        assert!((z[0].hypot(z[1]) - 0.5).abs() < 1e-8);
    }
    let tree = s.tree();
    for i in 0..5000 {
        let a = std::f64::consts::TAU * i as f64 / 5000.0;
        assert!(tree.distance(&[0.5 * a.cos(), 0.5 * a.sin()]) <= res);
    }
    assert!(!s.sign_change_warning);
}

#[test]
fn sphere_samples_cover_the_sphere() {
    let p: Polynomial = "x0^2 + x1^2 + x2^2 - 0.49".parse().unwrap();
    let res = 0.05;
    let s = sample_zero_set(&p, &[0.0; 3], 1.0, res).unwrap();
    let tree = s.tree();
    let dense = zeroflat::sampling::sphere_points(3, 4000, 3);
    for u in dense.chunks(3) {
        let q: Vec<f64> = u.iter().map(|v| 0.7 * v).collect();
        assert!(tree.distance(&q) <= res, "{q:?}");
    }
}

#[test]
fn window_is_clipped_to_the_ball() {
    let p: Polynomial = "x1".parse().unwrap();
    let s = sample_zero_set(&p, &[0.3, 0.0], 0.5, 0.01).unwrap();
    for z in s.points() {
        assert!(((z[0] - 0.3).powi(2) + z[1].powi(2)).sqrt() <= 0.5 + 1e-12);
    }
    let xs: Vec<f64> = s.points().map(|z| z[0]).collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(lo <= -0.2 + 0.01 && hi >= 0.8 - 0.01, "{lo} {hi}");
}

#[test]
fn double_root_triggers_the_sign_change_warning() {
    let p: Polynomial = "x0^2".parse().unwrap();
    let s = sample_zero_set(&p, &[0.0, 0.0], 1.0, 0.02).unwrap();
    assert!(s.sign_change_warning);
}

#[test]
fn sampled_line_is_near_the_exact_disc() {
    let p: Polynomial = "x0 - x1".parse().unwrap();
    let res = 0.01;
    let s = sample_zero_set(&p, &[0.0, 0.0], 1.0, res).unwrap();
    let plane = Hyperplane::new(&[1.0, -1.0], &[0.0, 0.0]).unwrap();
    let disc = hyperplane_disc(&plane, &[0.0, 0.0], 1.0, res / 4.0).unwrap();
    assert!(hausdorff_distance(&s, &disc).unwrap() <= res);
}

#[test]
fn blowup_of_a_regular_root_converges_linearly() {
    let p: Polynomial = "x0*x1 + 2 x1".parse().unwrap();
    let scales: Vec<f64> = (1..=6).map(|i| 0.5f64.powi(i)).collect();
    let res = 0.005;
    let seq = blowup_sequence(&p, &[0.0, 0.0], &scales, 1.0, res).unwrap();
    assert_eq!(seq.limit_degree, 1);
    let hd: Vec<f64> = seq.frames.iter().map(|f| f.hd_to_limit).collect();
    // The rescaled set is y (2 + r x) = 0, i.e. exactly the limit line.
    for h in &hd {
        assert!(*h <= 2.0 * res, "{hd:?}");
    }
}

#[test]
fn blowup_of_the_tacnode_is_the_axis() {
    let p: Polynomial = "x0^4 + x1^4 - x1^2".parse().unwrap();
    let scales = [0.1, 0.01, 0.001];
    let res = 0.002;
    let seq = blowup_sequence(&p, &[0.0, 0.0], &scales, 1.0, res).unwrap();
    assert_eq!(seq.limit_degree, 2);
    for f in &seq.frames {
        // Local expansion y ≈ ±x²: the rescaled branches sit within r of the axis.
        assert!(f.hd_to_limit <= f.scale * 1.01 + 2.0 * res, "{} {}", f.scale, f.hd_to_limit);
    }
    for z in seq.limit.points() {
        // Double root: Newton stalls at about the square root of the residual tolerance.
        assert!(z[1].abs() < 1e-3, "{z:?}");
    }
}

#[test]
fn homogeneous_blowups_stay_at_the_sampling_floor() {
    let h: Polynomial = "x0^3 - 3 x0 x1^2".parse().unwrap();
    let scales: Vec<f64> = (1..=5).map(|i| 0.5f64.powi(i)).collect();
    let res = 0.005;
    let seq = blowup_sequence(&h, &[0.0, 0.0], &scales, 1.0, res).unwrap();
    for f in &seq.frames {
        assert!(f.hd_to_limit <= 2.0 * res, "{}", f.hd_to_limit);
    }
}

#[test]
fn coefficient_convergence_does_not_force_set_convergence() {
    for i in [10, 100] {
        let rep = verify_coefficient_vs_set_convergence(ConvergenceFixture::TangentBall, i, 0.002).unwrap();
        assert!((rep.coefficient_distance - 1.0 / i as f64).abs() < 1e-12);
        assert!(rep.hausdorff >= 0.4, "i={i}: {}", rep.hausdorff);
    }
    let a = verify_coefficient_vs_set_convergence(ConvergenceFixture::GenericInterior, 10, 0.002).unwrap();
    let b = verify_coefficient_vs_set_convergence(ConvergenceFixture::GenericInterior, 100, 0.002).unwrap();
    assert!(b.hausdorff < a.hausdorff / 5.0, "{} {}", a.hausdorff, b.hausdorff);
}
