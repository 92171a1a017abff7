//! Acceptance run: every criterion is measured against an independent oracle
//! and reported on one line as PASS or FAIL. The process exits nonzero when
//! any criterion fails.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zeroflat::approx::{
    estimate_delta, estimate_delta_prime, estimate_delta_prime_with, openness_probe, partition_gamma,
    random_singular_root, scale_transfer_check, DeltaConfig, OpennessConfig, DELTA_SCALES,
};
use zeroflat::geometry::{
    blowup_sequence, sample_zero_set, verify_coefficient_vs_set_convergence, ConvergenceFixture,
};
use zeroflat::harmonic::random_harmonic_with;
use zeroflat::poly::random_polynomial;
use zeroflat::regularity::{
    linear_decay_check, local_flatness, theta_curve, zeta, Classification, ExtendedNonNegReal, FlatnessSearch,
};
use zeroflat::Polynomial;
use zeroflat_cli::suites::flatness_upper_bound;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn p(s: &str) -> Polynomial {
    s.parse().unwrap()
}

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(42);
    r.set_stream(stream);
    r
}

fn rand_point(rng: &mut ChaCha8Rng, n: usize, s: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-s..s)).collect()
}

/// Sup of `|f|` over the unit circle by a dense angle sweep.
fn circle_sup(f: impl Fn(f64, f64) -> f64) -> f64 {
    (0..200_000)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / 200_000.0;
            f(a.cos(), a.sin()).abs()
        })
        .fold(0.0, f64::max)
}

/// Flatness at the origin of `2k` equally spaced rays in the unit disc,
/// minimized over line directions by a dense sweep.
fn rays_oracle(k: usize) -> f64 {
    let rays: Vec<f64> = (0..2 * k).map(|j| PI * j as f64 / k as f64).collect();
    let to_rays = |phi: f64| {
        rays.iter()
            .map(|a| {
                let d = (phi - a).rem_euclid(2.0 * PI);
                let d = d.min(2.0 * PI - d);
                if d <= PI / 2.0 {
                    d.sin()
                } else {
                    1.0
                }
            })
            .fold(f64::INFINITY, f64::min)
    };
    (0..100_000)
        .map(|i| {
            let phi = PI * i as f64 / 100_000.0;
            let side1 = rays.iter().map(|a| (a - phi).sin().abs()).fold(0.0, f64::max);
            side1.max(to_rays(phi)).max(to_rays(phi + PI))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Height of the tacnode branch `y² - y⁴ = x⁴` where it meets the circle of radius `r`.
fn tacnode_height(r: f64) -> f64 {
    let f = |y: f64| {
        let x2 = r * r - y * y;
        y * y - y.powi(4) - x2 * x2
    };
    let (mut lo, mut hi) = (0.0, r);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn zeta_fixture() -> Verdict {
    let t = Instant::now();
    let z = zeta(&p("x0*x1"), 1, &[2.0, 0.0], 1.0).unwrap().value();
    let elapsed = t.elapsed().as_secs_f64();
    // Parts at (2, 0) are 2y and xy.
    let oracle = circle_sup(|x, y| x * y) / circle_sup(|_, y| 2.0 * y);
    verdict(
        (z - 0.5).abs() <= 1e-6 && elapsed < 1.0,
        format!("measured {z}, sup-norm oracle {oracle:.6}, stated target 0.5 +- 1e-6, {elapsed:.3} s"),
    )
}

fn theta_fixtures() -> Verdict {
    let t = Instant::now();
    let res = 1e-3;
    let xy = p("x0*x1");
    let s = sample_zero_set(&xy, &[2.0, 0.0], 1.0, res).unwrap();
    let flat = local_flatness(&s, &[2.0, 0.0], 1.0, FlatnessSearch::Multistart).unwrap().theta;
    let s = sample_zero_set(&xy, &[0.0, 0.0], 1.0, res).unwrap();
    let cross = local_flatness(&s, &[0.0, 0.0], 1.0, FlatnessSearch::Multistart).unwrap().theta;
    let elapsed = t.elapsed().as_secs_f64();
    let oracle = (0..200_000)
        .map(|i| {
            let phi = PI * i as f64 / 200_000.0;
            phi.cos().abs().max(phi.sin().abs())
        })
        .fold(f64::INFINITY, f64::min);
    verdict(
        flat <= 2.0 * res && (cross - oracle).abs() <= 0.02 && elapsed < 10.0,
        format!("theta at (2,0) = {flat:.2e} (<= {}), at 0 = {cross:.4} vs oracle {oracle:.4}, {elapsed:.2} s", 2.0 * res),
    )
}

fn tacnode_witness() -> Verdict {
    let tac = p("x0^4 + x1^4 - x1^2");
    let infinite = [1.0, 0.1]
        .iter()
        .all(|&r| zeta(&tac, 1, &[0.0, 0.0], r).unwrap() == ExtendedNonNegReal::Infinite);
    let r = 0.1;
    let res = 1e-3 * r;
    let s = sample_zero_set(&tac, &[0.0, 0.0], r, res).unwrap();
    let theta = local_flatness(&s, &[0.0, 0.0], r, FlatnessSearch::Multistart).unwrap().theta;
    let oracle = tacnode_height(r) / r;
    verdict(
        infinite && theta <= 0.03,
        format!(
            "zeta_1 infinite at r in {{1, 0.1}}: {infinite}; theta(0, 0.1) = {theta:.4}, branch oracle {oracle:.4}, stated bound 0.03"
        ),
    )
}

/// Random harmonics with roots found by sampling, shared by the decay and
/// bound criteria.
fn harmonic_population() -> Vec<(usize, u32, Polynomial, Vec<f64>)> {
    let mut g = rng(4);
    let mut out = Vec::new();
    while out.len() < 200 {
        let n = 2 + out.len() % 2;
        let d = g.random_range(2..=5);
        let h = random_harmonic_with(n, d, true, &mut g).unwrap();
        let s = sample_zero_set(&h, &vec![0.0; n], 1.0, 0.05).unwrap();
        let target = rand_point(&mut g, n, 0.5);
        if let Some((i, _)) = s.tree().nearest(&target) {
            out.push((n, d, h, s.point(i).to_vec()));
        }
    }
    out
}

fn linear_decay(pop: &[(usize, u32, Polynomial, Vec<f64>)]) -> Verdict {
    let t = Instant::now();
    let mut finite = 0;
    let mut bad = Vec::new();
    for (i, (_, _, h, x)) in pop.iter().enumerate() {
        let rep = linear_decay_check(h, x, 0.5, &[0.5, 0.25]).unwrap();
        if !rep.zeta_r.is_finite() {
            continue;
        }
        finite += 1;
        // Independent recomputation of both sides.
        let z = |r: f64| zeta(h, 1, x, r).unwrap().value();
        let ok = [0.5, 0.25].iter().all(|&s| z(s * 0.5) <= s * z(0.5) * (1.0 + 1e-6));
        if !rep.all_pass || !ok {
            bad.push(i);
        }
    }
    let elapsed = t.elapsed().as_secs_f64();
    verdict(
        bad.is_empty() && finite > 0 && elapsed < 120.0,
        format!("{finite} finite cases, {} violations {bad:?}, {elapsed:.1} s", bad.len()),
    )
}

fn flatness_bound(pop: &[(usize, u32, Polynomial, Vec<f64>)]) -> Verdict {
    let mut checked = 0;
    let mut bad = Vec::new();
    for (i, (n, d, h, x)) in pop.iter().enumerate() {
        let r = 0.5;
        let bound = SQRT_2 * (*d as f64 - 1.0) * zeta(h, 1, x, r).unwrap().value();
        if bound >= 1.0 {
            // θ <= 1 always holds.
            continue;
        }
        let res = if *n == 2 { 0.01 * r } else { 0.03 * r };
        let s = sample_zero_set(h, x, r, res).unwrap();
        let theta = flatness_upper_bound(h, &s, x, r).unwrap();
        checked += 1;
        if theta > bound + 3.0 * res / r {
            bad.push((i, theta, bound));
        }
    }
    verdict(
        bad.is_empty(),
        format!("{checked} nontrivial cases of {}, violations {bad:?}", pop.len()),
    )
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

fn transformation_laws() -> Verdict {
    let mut g = rng(6);
    let mut worst = 0usize;
    for case in 0..100 {
        let n = 2 + case % 3;
        let d = g.random_range(1..=5);
        let q = random_polynomial(n, d, &mut g).unwrap();
        let c = g.random_range(0.1..5.0) * if g.random_bool(0.5) { -1.0 } else { 1.0 };
        let z = rand_point(&mut g, n, 1.0);
        let tt = g.random_range(0.2..3.0);
        let x = rand_point(&mut g, n, 1.0);
        let r = g.random_range(0.1..2.0);
        let k = g.random_range(0..=d);
        let base = zeta(&q, k, &x, r).unwrap();
        let xz: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a + b).collect();
        let tx: Vec<f64> = x.iter().map(|v| v * tt).collect();
        let ok = rel_close(zeta(&q.scaled(c), k, &x, r).unwrap(), base, 1e-9)
            && rel_close(zeta(&q.recenter(&z).unwrap(), k, &x, r).unwrap(), zeta(&q, k, &xz, r).unwrap(), 1e-9)
            && rel_close(zeta(&q.dilate(tt).unwrap(), k, &x, r).unwrap(), zeta(&q, k, &tx, tt * r).unwrap(), 1e-9);
        if !ok {
            worst += 1;
        }
    }
    verdict(worst == 0, format!("100 tuples, {worst} violations of the 1e-9 relative tolerance"))
}

fn constant_estimates() -> Verdict {
    let t = Instant::now();
    let e22 = estimate_delta_prime(2, 2, 12, 42).unwrap().value;
    let e23 = estimate_delta_prime(2, 3, 12, 42).unwrap().value;
    let (o2, o3) = (rays_oracle(2), rays_oracle(3));
    let mut values = vec![("2,2", e22), ("2,3", e23)];
    values.push(("2,4", estimate_delta_prime(2, 4, 6, 42).unwrap().value));
    for k in 2..=4 {
        let cfg = DeltaConfig::for_dim(3);
        let v = estimate_delta_prime_with(3, k, 6, 42, &cfg).unwrap().value;
        values.push((["3,2", "3,3", "3,4"][k as usize - 2], v));
    }
    let elapsed = t.elapsed().as_secs_f64();
    let positive = values.iter().all(|v| v.1 > 0.0);
    let listed: Vec<String> = values.iter().map(|(k, v)| format!("({k})={v:.4}")).collect();
    verdict(
        (e22 - o2).abs() <= 0.01 && (e23 - o3).abs() <= 0.01 && positive && elapsed < 300.0,
        format!("{}; ray oracles {o2:.4}, {o3:.4}; {elapsed:.0} s", listed.join(" ")),
    )
}

fn dichotomy() -> Verdict {
    let cfg = DeltaConfig::for_dim(2);
    let rel = cfg.relative_resolution;
    let delta = estimate_delta(2, 2, 10, 7).unwrap().value.min(estimate_delta(2, 3, 30, 7).unwrap().value);
    let mut g = rng(8);
    let mut singular_bad = Vec::new();
    for case in 0..100 {
        let (h, x) = random_singular_root(2, 2 + case % 2, &mut g).unwrap();
        let curve = theta_curve(&h, &x, &DELTA_SCALES, rel).unwrap();
        if curve.iter().any(|c| c.1 < delta - 3.0 * rel) {
            singular_bad.push(case);
        }
    }
    // Regular roots: the first scale with θ < delta, then the decay shape.
    let scales: Vec<f64> = (0..7).map(|j| 0.5 * 0.5f64.powi(j)).collect();
    let mut tails = Vec::new();
    let mut never_flat = Vec::new();
    let mut case = 0;
    while tails.len() + never_flat.len() < 100 {
        let d = g.random_range(2..=4);
        let h = random_harmonic_with(2, d, true, &mut g).unwrap();
        let s = sample_zero_set(&h, &[0.0, 0.0], 1.0, 0.05).unwrap();
        let target = rand_point(&mut g, 2, 0.5);
        let (i, _) = s.tree().nearest(&target).unwrap();
        let x = s.point(i).to_vec();
        if h.gradient_at(&x).unwrap().iter().all(|v| v.abs() < 1e-9) {
            continue;
        }
        let curve = theta_curve(&h, &x, &scales, rel).unwrap();
        match curve.iter().position(|c| c.1 < delta) {
            Some(j) => {
                let rstar = curve[j].0;
                tails.push(curve[j..].iter().map(|c| (c.0 / rstar, c.1)).collect::<Vec<_>>());
            }
            None => never_flat.push(case),
        }
        case += 1;
    }
    let slack = 3.0 * rel;
    let (calib, valid) = tails.split_at(tails.len() / 2);
    let c_est = calib
        .iter()
        .flatten()
        .map(|(s, th)| (th - slack).max(0.0) / s)
        .fold(0.0, f64::max);
    let violations = valid
        .iter()
        .flatten()
        .filter(|(s, th)| *th > 1.5 * c_est * s + slack)
        .count();
    verdict(
        singular_bad.is_empty() && never_flat.is_empty() && violations == 0,
        format!(
            "delta_est {delta:.4}; singular below threshold {singular_bad:?}; regular never flat {never_flat:?}; \
             C_est {c_est:.3} (x1.5 margin), {violations} decay violations"
        ),
    )
}

fn blowups() -> Verdict {
    let res = 0.005;
    let floor = 2.0 * res;
    let scales: Vec<f64> = (1..=8).map(|i| 0.5f64.powi(i)).collect();
    let mut g = rng(9);
    let mut bad = Vec::new();
    let mut fits = Vec::new();
    for f in 0..20 {
        let (h, x) = if f < 14 {
            (random_harmonic_with(2, g.random_range(2..=4), true, &mut g).unwrap(), vec![0.0, 0.0])
        } else {
            random_singular_root(2, 3, &mut g).unwrap()
        };
        let seq = blowup_sequence(&h, &x, &scales, 1.0, res).unwrap();
        let hd: Vec<f64> = seq.frames.iter().map(|fr| fr.hd_to_limit).collect();
        let c = scales[..4]
            .iter()
            .zip(&hd[..4])
            .map(|(r, d)| (d - floor).max(0.0) / r)
            .fold(0.0, f64::max);
        fits.push(c);
        let ok = scales[4..].iter().zip(&hd[4..]).all(|(r, d)| *d <= c * r + floor) && hd[7] <= c * scales[7] + floor;
        if !ok {
            bad.push((f, hd));
        }
    }
    let mut homogeneous_ok = true;
    for text in ["x0*x1", "x0^3 - 3 x0*x1^2", "x0^4 - 6 x0^2*x1^2 + x1^4"] {
        let seq = blowup_sequence(&p(text), &[0.0, 0.0], &scales, 1.0, res).unwrap();
        homogeneous_ok &= seq.frames.iter().all(|fr| fr.hd_to_limit <= floor);
    }
    let cmax = fits.iter().copied().fold(0.0, f64::max);
    verdict(
        bad.is_empty() && homogeneous_ok,
        format!("20 fixtures, largest fitted C {cmax:.3}, envelope failures {bad:?}; homogeneous at floor: {homogeneous_ok}"),
    )
}

fn coefficient_vs_set() -> Verdict {
    let res = 0.002;
    let mut far = Vec::new();
    let mut near = Vec::new();
    for i in [10, 100, 1000] {
        let t = verify_coefficient_vs_set_convergence(ConvergenceFixture::TangentBall, i, res).unwrap();
        far.push((t.coefficient_distance, t.hausdorff));
        near.push(verify_coefficient_vs_set_convergence(ConvergenceFixture::GenericInterior, i, res).unwrap().hausdorff);
    }
    let tangent_ok = far.iter().all(|f| f.1 >= 0.4) && far.windows(2).all(|w| w[1].0 < w[0].0);
    let interior_ok = [10.0, 100.0, 1000.0].iter().zip(&near).all(|(i, h)| *h <= 3.0 / i + 2.0 * res)
        && near[0] / near[1] > 5.0;
    verdict(
        tangent_ok && interior_ok,
        format!("tangent ball (coef dist, HD) {far:?}; interior HD {near:?} vs 3/i"),
    )
}

fn partition_criterion() -> Verdict {
    let delta = FRAC_1_SQRT_2;
    let eta = 6.0 * delta;
    let mut notes = Vec::new();
    let mut pass = true;
    let mut run = |name: &str, h: &Polynomial, n: usize, radius: f64, res: f64, d: u32| {
        let a = sample_zero_set(h, &vec![0.0; n], radius, res).unwrap();
        let grid = zeroflat::approx::default_scale_grid(res, 0.25 * radius);
        let out = partition_gamma(&a, d, eta, delta, &grid).unwrap();
        // Gradient oracle: singular iff the gradient vanishes to rounding.
        let grads: Vec<f64> = a
            .points()
            .map(|z| h.gradient_at(z).unwrap().iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        let tol = 1e-6 * grads.iter().copied().fold(0.0, f64::max);
        let disagree: Vec<&[f64]> = a
            .points()
            .zip(&out.labels)
            .zip(&grads)
            .filter(|((_, l), g)| (**l == Classification::Singular) != (**g <= tol))
            .map(|((z, _), _)| z)
            .collect();
        let agree = 1.0 - disagree.len() as f64 / a.len() as f64;
        // The singular set of both homogeneous fixtures is the origin.
        let far = disagree
            .iter()
            .map(|z| z.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        pass &= agree >= 0.99 && far <= 4.0 * res;
        notes.push(format!("{name}: {} points, agreement {agree:.4}, farthest disagreement {:.1} res", a.len(), far / res));
    };
    run("cross", &p("x0*x1"), 2, 2.0, 0.004, 2);
    let cubic = p("x0^2*x1 - x0^2*x2 + x1^2*x2 - x1^2*x0 + x2^2*x0 - x2^2*x1 - x0*x1*x2");
    run("cubic cone", &cubic, 3, 1.0, 0.02, 3);
    let cfg = OpennessConfig {
        eta,
        delta,
        root_scales: vec![0.2, 0.1, 0.05],
        relative_resolution: 0.01,
        resolution: 0.004,
    };
    let mut open = Vec::new();
    for root in [[2.0, 0.0], [0.0, -1.0], [0.5, 0.0]] {
        let rep = openness_probe(&p("x0*x1"), &root, &[0.05, 0.1, 0.2], &cfg).unwrap();
        open.push(rep.flat_radius);
    }
    let open_ok = open.iter().all(|r| *r > 0.0);
    notes.push(format!("openness radii at flat roots {open:?}"));
    verdict(pass && open_ok, notes.join("; "))
}

fn scale_transfer() -> Verdict {
    let mut g = rng(12);
    let mut draws = 0;
    let mut bad = Vec::new();
    while draws < 200 {
        let n = 2;
        let h = random_harmonic_with(n, g.random_range(2..=4), true, &mut g).unwrap();
        let res = 0.005;
        let a = sample_zero_set(&h, &[0.0, 0.0], 1.0, res).unwrap();
        let (x, r) = if draws % 2 == 0 {
            (vec![0.0, 0.0], 1.0)
        } else {
            let i = g.random_range(0..a.len());
            let x = a.point(i).to_vec();
            if x[0].hypot(x[1]) > 0.4 {
                continue;
            }
            (x, 0.5)
        };
        for _ in 0..5 {
            let s = g.random_range(0.1..0.9);
            let y = a.point(g.random_range(0..a.len())).to_vec();
            let gap = ((y[0] - x[0]).powi(2) + (y[1] - x[1]).powi(2)).sqrt();
            if gap + s * r > r {
                continue;
            }
            let rep = scale_transfer_check(&a, &x, r, &y, s).unwrap();
            if !rep.pass {
                bad.push((draws, rep.theta_y, rep.rhs));
            }
            draws += 1;
            if draws == 200 {
                break;
            }
        }
    }
    verdict(bad.is_empty(), format!("{draws} draws, violations {bad:?}"))
}

fn reproducibility() -> Verdict {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_zeroflat"))
            .args(["verify", "--seed", "42"])
            .output()
            .expect("binary runs")
    };
    let a = run();
    let b = run();
    let same = a.stdout == b.stdout;
    verdict(
        same && a.status.code() == Some(0) && b.status.code() == Some(0),
        format!("byte-identical: {same}, exit codes {:?} {:?}, {} bytes", a.status.code(), b.status.code(), a.stdout.len()),
    )
}

fn main() {
    let pop = std::cell::OnceCell::new();
    let population = || pop.get_or_init(harmonic_population);
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict>)> = vec![
        ("zeta fixture", Box::new(zeta_fixture)),
        ("flatness fixtures", Box::new(theta_fixtures)),
        ("tacnode dichotomy witness", Box::new(tacnode_witness)),
        ("linear decay", Box::new(|| linear_decay(population()))),
        ("flatness bound", Box::new(|| flatness_bound(population()))),
        ("transformation laws", Box::new(transformation_laws)),
        ("constant estimates", Box::new(constant_estimates)),
        ("flat/singular dichotomy", Box::new(dichotomy)),
        ("blow-up convergence", Box::new(blowups)),
        ("coefficient vs set convergence", Box::new(coefficient_vs_set)),
        ("flat/singular partition", Box::new(partition_criterion)),
        ("scale transfer", Box::new(scale_transfer)),
        ("reproducibility", Box::new(reproducibility)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<32} {} [{:.1} s] {}",
            i + 1,
            name,
            if v.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
