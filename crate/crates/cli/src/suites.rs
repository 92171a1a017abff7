//! Self-seeding property suites behind `verify`.
//!
//! Every suite draws its fixtures from a ChaCha stream keyed by the run seed
//! and the suite's position, so a suite's result does not depend on which
//! other suites run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use zeroflat::approx::{
    default_scale_grid, estimate_delta_with, flatness_propagation_check, openness_probe, partition_gamma,
    random_singular_root, scale_transfer_check, DeltaConfig, OpennessConfig, PropagationStatus, DELTA_SCALES,
};
use zeroflat::geometry::{
    blowup_sequence, sample_zero_set, verify_coefficient_vs_set_convergence, ConvergenceFixture,
};
use zeroflat::harmonic::{build_basis, estimate_lipschitz, harmonic_dimension, random_harmonic_with};
use zeroflat::poly::random_polynomial;
use zeroflat::regularity::{
    classify_root, flatness_for_normal, linear_decay_check, local_flatness, theta_curve_with, zeta,
    Classification, ExtendedNonNegReal, FlatnessSearch,
};
use zeroflat::{Degree, FlatError, Polynomial};

/// Options shared by all suites.
#[derive(Clone, Copy, Debug)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Negative control: scales the flatness-bound constant down by 1000.
    pub broken_constant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub id: &'static str,
    pub property: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub pass: bool,
    /// First failing input, when any.
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub all_pass: bool,
    pub suites: Vec<SuiteResult>,
}

pub struct Suite {
    pub id: &'static str,
    pub property: &'static str,
    run: fn(&mut Tally, &mut ChaCha8Rng, &SuiteOptions) -> Result<(), FlatError>,
}

/// Counts cases and keeps the first failure.
#[derive(Default)]
pub struct Tally {
    cases: usize,
    failures: usize,
    witness: Option<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.witness.is_none() {
                self.witness = Some(witness());
            }
        }
    }
}

pub const SUITES: &[Suite] = &[
    Suite {
        id: "zeta-fixtures",
        property: "relative part sizes on closed-form fixtures, including infinite values",
        run: zeta_fixtures,
    },
    Suite {
        id: "transformation-laws",
        property: "relative part sizes are invariant under scaling and covariant under translation and dilation",
        run: transformation_laws,
    },
    Suite {
        id: "linear-decay",
        property: "the linear relative size decays at least linearly in the radius at a root",
        run: linear_decay,
    },
    Suite {
        id: "flatness-bound",
        property: "local flatness is at most sqrt(2)(d-1) times the linear relative size",
        run: flatness_bound,
    },
    Suite {
        id: "homogeneous-nonflatness",
        property: "zero sets of homogeneous harmonics of degree >= 2 are far from flat at the origin",
        run: homogeneous_nonflatness,
    },
    Suite {
        id: "dichotomy",
        property: "singular roots stay non-flat at every scale while regular roots become flat",
        run: dichotomy,
    },
    Suite {
        id: "blowup-limits",
        property: "blow-ups of harmonic zero sets converge to the zero set of the lowest nonvanishing part",
        run: blowup_limits,
    },
    Suite {
        id: "coefficient-vs-set",
        property: "coefficient convergence need not give Hausdorff convergence of zero sets in a ball",
        run: coefficient_vs_set,
    },
    Suite {
        id: "scale-transfer",
        property: "flatness at a smaller inner ball is controlled by flatness at the outer ball",
        run: scale_transfer,
    },
    Suite {
        id: "flatness-propagation",
        property: "sufficient flatness at one scale persists at all smaller scales",
        run: flatness_propagation,
    },
    Suite {
        id: "partition",
        property: "flat/singular labels agree with the gradient and flat labels are open",
        run: partition,
    },
    Suite {
        id: "harmonic-basis",
        property: "harmonic bases have the right dimension and linear harmonics have unit Lipschitz constant",
        run: harmonic_basis,
    },
];

pub fn suite_ids() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.id).collect()
}

/// Runs the selected suites (all when `only` is empty) in catalogue order.
pub fn run_suites(only: &[String], opts: &SuiteOptions) -> Result<VerifyReport, String> {
    for id in only {
        if !SUITES.iter().any(|s| s.id == id) {
            return Err(format!("unknown suite `{id}`; known: {}", suite_ids().join(", ")));
        }
    }
    let mut suites = Vec::new();
    for (idx, suite) in SUITES.iter().enumerate() {
        if !only.is_empty() && !only.iter().any(|id| id == suite.id) {
            continue;
        }
        log::info!("suite {}", suite.id);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(idx as u64);
        let mut tally = Tally::default();
        if let Err(e) = (suite.run)(&mut tally, &mut rng, opts) {
            tally.check(false, || format!("error: {e}"));
        }
        suites.push(SuiteResult {
            id: suite.id,
            property: suite.property,
            cases: tally.cases,
            failures: tally.failures,
            pass: tally.failures == 0 && tally.cases > 0,
            witness: tally.witness,
        });
    }
    Ok(VerifyReport {
        all_pass: suites.iter().all(|s| s.pass),
        suites,
    })
}

fn poly(s: &str) -> Polynomial {
    s.parse().expect("built-in fixture parses")
}

fn rand_point(rng: &mut ChaCha8Rng, n: usize, s: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-s..s)).collect()
}

fn degree_of(p: &Polynomial) -> u32 {
    match p.degree() {
        Degree::Finite(d) => d,
        Degree::Zero => 0,
    }
}

/// A random harmonic vanishing at the origin and one of its roots, taken
/// from a coarse sample of the zero set near a random target in `B(0, 1/2)`.
fn harmonic_with_root(rng: &mut ChaCha8Rng, n: usize, d: u32) -> Result<Option<(Polynomial, Vec<f64>)>, FlatError> {
    let h = random_harmonic_with(n, d, true, rng)?;
    let target = rand_point(rng, n, 0.5);
    let s = sample_zero_set(&h, &vec![0.0; n], 1.0, 0.05)?;
    Ok(s.tree().nearest(&target).map(|(i, _)| (h.clone(), s.point(i).to_vec())))
}

fn rel_close(a: ExtendedNonNegReal, b: ExtendedNonNegReal, tol: f64) -> bool {
    match (a, b) {
        (ExtendedNonNegReal::Infinite, ExtendedNonNegReal::Infinite) => true,
        (ExtendedNonNegReal::Finite(x), ExtendedNonNegReal::Finite(y)) => {
            (x - y).abs() <= tol * x.abs().max(y.abs()).max(1e-300)
        }
        _ => false,
    }
}

fn zeta_fixtures(t: &mut Tally, _: &mut ChaCha8Rng, _: &SuiteOptions) -> Result<(), FlatError> {
    let xy = poly("x0*x1");
    // Parts at (2, 0) are 2y and xy with sup norms 2r and r^2/2 on B_r.
    for r in [1.0, 0.5, 0.25] {
        let z = zeta(&xy, 1, &[2.0, 0.0], r)?;
        t.check((z.value() - r / 4.0).abs() <= 1e-9, || format!("xy at (2,0), r={r}: {z}, expected {}", r / 4.0));
    }
    let z = zeta(&xy, 2, &[0.0, 0.0], 1.0)?;
    t.check(z == ExtendedNonNegReal::Finite(0.0), || format!("xy at 0, k=2: {z}"));
    let z = zeta(&xy, 1, &[0.0, 0.0], 1.0)?;
    t.check(z == ExtendedNonNegReal::Infinite, || format!("xy at 0, k=1: {z}"));
    let tac = poly("x0^4 + x1^4 - x1^2");
    for r in [1.0, 0.1] {
        let z = zeta(&tac, 1, &[0.0, 0.0], r)?;
        t.check(z == ExtendedNonNegReal::Infinite, || format!("tacnode r={r}: {z}"));
    }
    Ok(())
}

fn transformation_laws(t: &mut Tally, rng: &mut ChaCha8Rng, _: &SuiteOptions) -> Result<(), FlatError> {
    for case in 0..50 {
        let n = 2 + case % 2;
        let d = rng.random_range(2..=4);
        let p = random_polynomial(n, d, rng)?;
        let x = rand_point(rng, n, 1.0);
        let z = rand_point(rng, n, 1.0);
        let tt = rng.random_range(0.3..2.5);
        let r = rng.random_range(0.2..2.0);
        let k = rng.random_range(1..=d);
        let c = rng.random_range(-5.0..5.0);
        let base = zeta(&p, k, &x, r)?;
        let scaled = zeta(&p.scaled(c), k, &x, r)?;
        t.check(rel_close(scaled, base, 1e-12), || format!("scaling case {case}: {scaled} vs {base}"));
        let xz: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a + b).collect();
        let lhs = zeta(&p.recenter(&z)?, k, &x, r)?;
        let rhs = zeta(&p, k, &xz, r)?;
        t.check(rel_close(lhs, rhs, 1e-9), || format!("translation case {case}: {lhs} vs {rhs}"));
        let tx: Vec<f64> = x.iter().map(|v| v * tt).collect();
        let lhs = zeta(&p.dilate(tt)?, k, &x, r)?;
        let rhs = zeta(&p, k, &tx, tt * r)?;
        t.check(rel_close(lhs, rhs, 1e-9), || format!("dilation case {case}: {lhs} vs {rhs}"));
    }
    Ok(())
}

fn linear_decay(t: &mut Tally, rng: &mut ChaCha8Rng, _: &SuiteOptions) -> Result<(), FlatError> {
    for case in 0..60 {
        let n = 2 + case % 2;
        let d = rng.random_range(2..=5);
        let Some((h, x)) = harmonic_with_root(rng, n, d)? else { continue };
        let rep = linear_decay_check(&h, &x, 0.5, &[0.5, 0.25])?;
        if rep.zeta_r.is_finite() {
            t.check(rep.all_pass, || format!("case {case}: h = {h}, x = {x:?}"));
        }
    }
    Ok(())
}

fn flatness_bound(t: &mut Tally, rng: &mut ChaCha8Rng, opts: &SuiteOptions) -> Result<(), FlatError> {
    let factor = if opts.broken_constant { 1e-3 } else { 1.0 };
    for case in 0..30 {
        let n = if case % 5 == 4 { 3 } else { 2 };
        let d = rng.random_range(2..=5);
        let Some((h, x)) = harmonic_with_root(rng, n, d)? else { continue };
        let r = 0.5;
        let z = zeta(&h, 1, &x, r)?;
        let bound = factor * std::f64::consts::SQRT_2 * (d - 1) as f64 * z.value();
        if bound >= 1.0 {
            continue;
        }
        let res = if n == 2 { 0.01 * r } else { 0.03 * r };
        let set = sample_zero_set(&h, &x, r, res)?;
        let theta = flatness_upper_bound(&h, &set, &x, r)?;
        t.check(theta <= bound + 3.0 * res / r, || {
            format!("case {case}: h = {h}, x = {x:?}, r = {r}: theta {theta} > bound {bound}")
        });
    }
    Ok(())
}

/// An upper bound for `θ` at a regular root: the better of the grid search
/// and the tangent plane of the linear part.
pub fn flatness_upper_bound(
    h: &Polynomial,
    set: &zeroflat::geometry::SampledSet,
    x: &[f64],
    r: f64,
) -> Result<f64, FlatError> {
    let grid = local_flatness(set, x, r, FlatnessSearch::Grid)?.theta;
    let g = h.gradient_at(x)?;
    if g.iter().all(|v| *v == 0.0) {
        return Ok(grid);
    }
    Ok(grid.min(flatness_for_normal(set, x, r, &g)?))
}

fn homogeneous_nonflatness(t: &mut Tally, _: &mut ChaCha8Rng, _: &SuiteOptions) -> Result<(), FlatError> {
    // Re(z^k) vanishes on 2k equally spaced rays; the best line misses them by cos(π/2k).
    for (k, text) in [(2u32, "x0^2 - x1^2"), (3, "x0^3 - 3 x0*x1^2"), (4, "x0^4 - 6 x0^2*x1^2 + x1^4")] {
        let oracle = (std::f64::consts::PI / (2.0 * k as f64)).cos();
        let curve = theta_curve_with(&poly(text), &[0.0, 0.0], &[1.0], 0.004, FlatnessSearch::Multistart)?;
        let th = curve[0].1;
        t.check((th - oracle).abs() <= 0.02, || format!("k={k}: theta {th} vs {oracle}"));
    }
    let cone = poly("x0^2 + x1^2 - 2 x2^2");
    let th = theta_curve_with(&cone, &[0.0; 3], &[1.0], 0.03, FlatnessSearch::Grid)?[0].1;
    t.check(th > 0.3, || format!("quadratic cone: theta {th}"));
    Ok(())
}

fn dichotomy(t: &mut Tally, rng: &mut ChaCha8Rng, opts: &SuiteOptions) -> Result<(), FlatError> {
    let cfg = DeltaConfig {
        refine_evals: 0,
        ..DeltaConfig::for_dim(2)
    };
    let rel = cfg.relative_resolution;
    let delta = estimate_delta_with(2, 2, 2, opts.seed, &cfg)?
        .value
        .min(estimate_delta_with(2, 3, 6, opts.seed, &cfg)?.value);
    t.check(delta > 0.5, || format!("delta estimate {delta}"));
    for case in 0..8 {
        let d = 2 + case % 2;
        let (h, x) = random_singular_root(2, d, rng)?;
        let curve = theta_curve_with(&h, &x, &DELTA_SCALES, rel, cfg.search)?;
        let low = curve.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        t.check(low >= delta - 3.0 * rel, || format!("singular case {case}: h = {h}, x = {x:?}: {curve:?}"));
    }
    for case in 0..8 {
        let d = rng.random_range(2..=4);
        let Some((h, x)) = harmonic_with_root(rng, 2, d)? else { continue };
        let v = classify_root(&h, &x, delta, &[0.5, 0.125, 0.03125], rel)?;
        t.check(v.classification == Classification::Flat, || {
            format!("regular case {case}: h = {h}, x = {x:?}: {:?}", v.theta_curve)
        });
    }
    Ok(())
}

fn blowup_limits(t: &mut Tally, _: &mut ChaCha8Rng, _: &SuiteOptions) -> Result<(), FlatError> {
    let scales: Vec<f64> = (1..=5).map(|i| 0.5f64.powi(i)).collect();
    let res = 0.005;
    for text in ["x0*x1 + 2 x1", "x0^3 - 3 x0*x1^2", "x0*x1"] {
        let seq = blowup_sequence(&poly(text), &[0.0, 0.0], &scales, 1.0, res)?;
        for f in &seq.frames {
            t.check(f.hd_to_limit <= 2.0 * res, || format!("{text} at scale {}: {}", f.scale, f.hd_to_limit));
        }
    }
    let seq = blowup_sequence(&poly("x0^3 + x0*x1 - x1^2 + x1"), &[0.0, 0.0], &scales, 1.0, res)?;
    for f in &seq.frames {
        // Regular root: the rescaled set is within O(r) of the tangent line.
        t.check(f.hd_to_limit <= 4.0 * f.scale + 2.0 * res, || format!("cubic at scale {}: {}", f.scale, f.hd_to_limit));
    }
    Ok(())
}

fn coefficient_vs_set(t: &mut Tally, _: &mut ChaCha8Rng, _: &SuiteOptions) -> Result<(), FlatError> {
    for i in [10, 100] {
        let rep = verify_coefficient_vs_set_convergence(ConvergenceFixture::TangentBall, i, 0.004)?;
        t.check(rep.hausdorff >= 0.4, || format!("tangent ball i={i}: {}", rep.hausdorff));
        t.check((rep.coefficient_distance - 1.0 / i as f64).abs() < 1e-12, || format!("i={i}: coefficient distance"));
    }
    let a = verify_coefficient_vs_set_convergence(ConvergenceFixture::GenericInterior, 10, 0.004)?;
    let b = verify_coefficient_vs_set_convergence(ConvergenceFixture::GenericInterior, 100, 0.004)?;
    t.check(b.hausdorff < a.hausdorff / 5.0, || format!("interior: {} then {}", a.hausdorff, b.hausdorff));
    Ok(())
}

fn scale_transfer(t: &mut Tally, rng: &mut ChaCha8Rng, _: &SuiteOptions) -> Result<(), FlatError> {
    let mut case = 0;
    while case < 12 {
        let d = rng.random_range(2..=4);
        let h = random_harmonic_with(2, d, true, rng)?;
        let a = sample_zero_set(&h, &[0.0, 0.0], 1.0, 0.01)?;
        let s = rng.random_range(0.2..0.6);
        let y = a.point(rng.random_range(0..a.len())).to_vec();
        if y[0].hypot(y[1]) + s > 1.0 {
            continue;
        }
        let rep = scale_transfer_check(&a, &[0.0, 0.0], 1.0, &y, s)?;
        t.check(rep.pass, || format!("h = {h}, y = {y:?}, s = {s}: {rep:?}"));
        case += 1;
    }
    Ok(())
}

fn flatness_propagation(t: &mut Tally, _: &mut ChaCha8Rng, _: &SuiteOptions) -> Result<(), FlatError> {
    let scales = [0.5, 0.25, 0.125];
    for (text, x, want) in [
        ("x0*x1", [2.0, 0.0], PropagationStatus::Held),
        ("x0 - 3 x1", [0.0, 0.0], PropagationStatus::Held),
        ("x0^2 - x1^2 + x1", [0.0, 0.0], PropagationStatus::Held),
        ("x0*x1", [0.0, 0.0], PropagationStatus::PremiseFalse),
    ] {
        let rep = flatness_propagation_check(&poly(text), &x, 0.5, 0.4, 0.5, &scales, 0.005)?;
        t.check(rep.status == want, || format!("{text} at {x:?}: {rep:?}"));
    }
    Ok(())
}

fn partition(t: &mut Tally, _: &mut ChaCha8Rng, _: &SuiteOptions) -> Result<(), FlatError> {
    let res = 0.01;
    let delta = std::f64::consts::FRAC_1_SQRT_2;
    let xy = poly("x0*x1");
    let a = sample_zero_set(&xy, &[0.0, 0.0], 2.0, res)?;
    let out = partition_gamma(&a, 2, 6.0 * delta, delta, &default_scale_grid(res, 0.5))?;
    let agree = out.oracle_agreement.unwrap_or(0.0);
    t.check(agree >= 0.98, || format!("cross partition agreement {agree}"));
    for (z, l) in a.points().zip(&out.labels) {
        if *l == Classification::Singular {
            let dist = z[0].hypot(z[1]);
            t.check(dist <= 4.0 * res, || format!("singular label at {z:?}"));
        }
    }
    let cfg = OpennessConfig {
        eta: 6.0 * delta,
        delta,
        root_scales: vec![0.2, 0.1, 0.05],
        relative_resolution: 0.01,
        resolution: 0.004,
    };
    let rep = openness_probe(&xy, &[2.0, 0.0], &[0.05, 0.1, 0.2], &cfg)?;
    t.check(rep.flat_radius == 0.2, || format!("openness at (2,0): {rep:?}"));
    Ok(())
}

fn harmonic_basis(t: &mut Tally, rng: &mut ChaCha8Rng, _: &SuiteOptions) -> Result<(), FlatError> {
    let choose = |n: usize, k: usize| (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1));
    for n in 2..=5 {
        for k in 0..=6u32 {
            let ku = k as usize;
            let want = choose(n + ku - 1, ku) - if ku >= 2 { choose(n + ku - 3, ku - 2) } else { 0 };
            t.check(harmonic_dimension(n, k) == want, || format!("dimension n={n} k={k}"));
            if k >= 1 && n <= 4 {
                let b = build_basis(n, k)?;
                let ok = b.len() == want && b.elements.iter().all(|e| e.is_harmonic(1e-12) && e.is_homogeneous());
                t.check(ok, || format!("basis n={n} k={k}"));
            }
        }
    }
    let h = random_harmonic_with(3, 4, false, rng)?;
    t.check(h.is_harmonic(1e-9) && degree_of(&h) == 4, || format!("random harmonic {h}"));
    for n in [2, 3] {
        let est = estimate_lipschitz(n, 1, 3, 7)?;
        t.check((est.a_lower - 1.0).abs() <= 1e-3, || format!("Lipschitz n={n}: {}", est.a_lower));
    }
    Ok(())
}
