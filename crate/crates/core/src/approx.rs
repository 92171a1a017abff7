//! Approximation of sets by zero sets of harmonic polynomials, empirical
//! non-flatness constants, and the flat/singular partition of a sampled set.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_positive, FlatError, Result};
use crate::geometry::{
    check_decreasing, directed_distance, recenter_at_root, sample_recentered, sample_zero_set,
    SampledSet,
};
use crate::harmonic::{build_basis, random_unit_homogeneous, stacked_basis, MAX_HARMONIC_DEGREE};
use crate::optim::NelderMead;
use crate::poly::{Evaluator, Polynomial};
use crate::regularity::{
    classify_root, flatness_for_normal, local_flatness, theta_curve, theta_curve_with, Classification, FlatnessSearch,
};
use crate::sampling::{dist2, norm};
use crate::spatial::KdTree;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxScore {
    /// Upper bound for the closeness of the set to harmonic zero sets of degree `<= d`.
    pub theta_class: f64,
    /// Best harmonic fit in window coordinates `y = (z - x) / r`; vanishes at 0.
    pub best_fit: Polynomial,
    pub d: u32,
    /// Best value found using degrees `<= k`, for `k = 1..=d`.
    pub per_degree: Vec<f64>,
}

/// The window `A ∩ B(x, r)` rescaled to the unit ball.
struct Window {
    n: usize,
    pts: Vec<f64>,
    tree: KdTree,
    set: SampledSet,
    res: f64,
}

impl Window {
    fn new(a: &SampledSet, x: &[f64], r: f64) -> Result<Self> {
        let n = a.dim();
        let mut pts = Vec::new();
        for i in a.tree().within(x, r * (1.0 + 1e-12)) {
            pts.extend(a.point(i).iter().zip(x).map(|(a, b)| (a - b) / r));
        }
        if pts.is_empty() {
            return Err(FlatError::EmptySet("no samples inside the approximation window"));
        }
        let res = a.resolution() / r;
        let set = SampledSet::from_points(n, &pts, &vec![0.0; n], 1.0 + 1e-12, res)?;
        Ok(Window {
            n,
            tree: KdTree::new(n, &pts),
            pts,
            set,
            res,
        })
    }

    /// `HD[Y, Σ_h ∩ B_1]` for a polynomial with `h(0) = 0`.
    fn distance_to(&self, h: &Polynomial) -> f64 {
        if h.is_constant() {
            return f64::INFINITY;
        }
        let origin = vec![0.0; self.n];
        let Ok(s) = sample_recentered(h, &origin, 1.0, self.res) else {
            return f64::INFINITY;
        };
        if s.is_empty() {
            return f64::INFINITY;
        }
        directed_distance(&s, &self.tree).max(directed_distance(&self.set, s.tree()))
    }
}

fn combine(basis: &[Polynomial], c: &[f64]) -> Polynomial {
    let mut h = Polynomial::zero(basis[0].dim());
    for (b, &ci) in basis.iter().zip(c) {
        if ci != 0.0 {
            h = &h + &b.scaled(ci);
        }
    }
    h
}

/// Coefficients minimizing `Σ h(y_i)^2 / Σ |∇h(y_i)|^2` over the span of `basis`.
fn gradient_weighted_fit(basis: &[Polynomial], pts: &[f64], n: usize) -> Option<Vec<f64>> {
    let m = basis.len();
    let evs: Vec<Evaluator> = basis.iter().map(Evaluator::new).collect();
    let count = pts.len() / n;
    let stride = (count / 4000).max(1);
    let mut mm = DMatrix::<f64>::zeros(m, m);
    let mut nn = DMatrix::<f64>::zeros(m, m);
    let mut v = vec![0.0; m];
    let mut g = vec![vec![0.0; n]; m];
    for y in pts.chunks(n).step_by(stride) {
        for i in 0..m {
            v[i] = evs[i].value_and_gradient(y, &mut g[i]);
        }
        for i in 0..m {
            for j in 0..m {
                mm[(i, j)] += v[i] * v[j];
                nn[(i, j)] += g[i].iter().zip(&g[j]).map(|(a, b)| a * b).sum::<f64>();
            }
        }
    }
    let tr = nn.trace().max(1e-300);
    for i in 0..m {
        nn[(i, i)] += 1e-12 * tr;
    }
    let chol = nn.cholesky()?;
    let l = chol.l();
    let linv = l.clone().try_inverse()?;
    let reduced = &linv * &mm * linv.transpose();
    let sym = (&reduced + reduced.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let (imin, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    let w = eig.eigenvectors.column(imin).into_owned();
    let c = linv.transpose() * w;
    let s = c.norm();
    (s > 0.0 && s.is_finite()).then(|| c.iter().map(|x| x / s).collect())
}

/// Upper bound on the closeness of `A` near `x` at scale `r` to zero sets of
/// harmonic polynomials of degree `<= d` vanishing at `x`.
///
/// Degree 1 is exactly the local flatness. Each higher degree starts from
/// the previous optimum, a gradient-weighted algebraic fit and `budget`
/// random directions, each polished by downhill simplex; the reported value
/// is non-increasing in `d` by construction.
pub fn theta_class_hd(
    a: &SampledSet,
    x: &[f64],
    r: f64,
    d: u32,
    budget: usize,
    seed: u64,
) -> Result<ApproxScore> {
    if !(1..=MAX_HARMONIC_DEGREE).contains(&d) {
        return Err(FlatError::OutOfRange {
            what: "d",
            value: d as i64,
            range: "1..=10",
        });
    }
    check_positive("radius", r)?;
    let win = Window::new(a, x, r)?;
    let n = win.n;
    let flat = local_flatness(a, x, r, FlatnessSearch::Multistart)?;
    let nu = flat.best_plane.normal().to_vec();
    let mut best_fit = Polynomial::from_terms(
        n,
        nu.iter()
            .enumerate()
            .map(|(i, &c)| (crate::MultiIndex::unit(n, i), c)),
    )?;
    let mut best = flat.theta;
    let mut per_degree = vec![best];
    // Coefficients of the incumbent in the degree-1 basis (unit coordinate forms).
    let basis1 = stacked_basis(n, 1, 1)?;
    let mut best_c: Vec<f64> = basis1.iter().map(|b| inner(b, &best_fit)).collect();

    for k in 2..=d {
        let basis = stacked_basis(n, 1, k)?;
        let m = basis.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9e37_79b9));
        let mut starts: Vec<Vec<f64>> = Vec::new();
        let mut warm = best_c.clone();
        warm.resize(m, 0.0);
        starts.push(warm);
        if let Some(c) = gradient_weighted_fit(&basis, &win.pts, n) {
            starts.push(c);
        }
        for _ in 0..budget {
            starts.push(crate::sampling::random_unit(m, &mut rng));
        }
        let nm = NelderMead {
            step: 0.15,
            max_evals: (12 * (m + 1)).min(200),
            ftol: win.res * 0.05,
            xtol: 1e-4,
        };
        for c0 in starts {
            let f0 = win.distance_to(&combine(&basis, &c0));
            let run = nm.minimize(|c| win.distance_to(&combine(&basis, c)), &c0);
            let (c, f) = if run.value < f0 { (run.x, run.value) } else { (c0, f0) };
            if f < best {
                best = f;
                let s = norm(&c);
                best_c = c.iter().map(|v| v / s).collect();
                best_fit = combine(&basis, &best_c);
            }
        }
        if best_c.len() < m {
            best_c.resize(m, 0.0);
        }
        per_degree.push(best);
    }
    Ok(ApproxScore {
        theta_class: best,
        best_fit,
        d,
        per_degree,
    })
}

/// Euclidean inner product of coefficient tables.
fn inner(a: &Polynomial, b: &Polynomial) -> f64 {
    a.terms().map(|(k, c)| c * b.coefficient(k)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaKind {
    /// Non-flatness of homogeneous harmonic zero sets at the origin.
    DeltaPrime,
    /// Non-flatness at singular roots of harmonic polynomials of bounded degree.
    Delta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub kind: DeltaKind,
    pub n: usize,
    /// `k` for homogeneous estimates, `d` for singular-root estimates.
    pub degree: u32,
    pub value: f64,
    pub minimizer: Polynomial,
    pub witness_root: Vec<f64>,
    pub witness_scale: f64,
    pub trials: usize,
    pub seed: u64,
    pub relative_resolution: f64,
    /// `(r, θ)` for the minimizer at `r ∈ {1/2, 1, 2}` (homogeneous case only).
    pub scale_check: Vec<(f64, f64)>,
}

impl DeltaEstimate {
    /// Largest deviation of the scale check from the reported value.
    pub fn scale_spread(&self) -> f64 {
        let v: Vec<f64> = self.scale_check.iter().map(|c| c.1).collect();
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if v.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaConfig {
    /// Sampling resolution as a fraction of the window radius.
    pub relative_resolution: f64,
    /// Simplex evaluations spent polishing the best trial.
    pub refine_evals: usize,
    /// Normal search used for each flatness measurement.
    pub search: FlatnessSearch,
}

impl DeltaConfig {
    pub fn for_dim(n: usize) -> Self {
        match n {
            2 => DeltaConfig {
                relative_resolution: 0.004,
                refine_evals: 40,
                search: FlatnessSearch::Multistart,
            },
            3 => DeltaConfig {
                relative_resolution: 0.03,
                refine_evals: 20,
                search: FlatnessSearch::Grid,
            },
            _ => DeltaConfig {
                relative_resolution: 0.08,
                refine_evals: 10,
                search: FlatnessSearch::Grid,
            },
        }
    }
}

fn theta_at(h: &Polynomial, x: &[f64], r: f64, cfg: &DeltaConfig) -> f64 {
    theta_curve_with(h, x, &[r], cfg.relative_resolution, cfg.search)
        .ok()
        .and_then(|c| c.first().map(|c| c.1))
        .unwrap_or(f64::INFINITY)
}

/// Smallest measured `θ_{Σ_h}(0, 1)` over random homogeneous harmonic `h`
/// of degree `k`, polished by simplex descent on the coefficients.
pub fn estimate_delta_prime(n: usize, k: u32, trials: usize, seed: u64) -> Result<DeltaEstimate> {
    estimate_delta_prime_with(n, k, trials, seed, &DeltaConfig::for_dim(n))
}

pub fn estimate_delta_prime_with(
    n: usize,
    k: u32,
    trials: usize,
    seed: u64,
    cfg: &DeltaConfig,
) -> Result<DeltaEstimate> {
    check_dim(n)?;
    if k < 2 {
        return Err(FlatError::OutOfRange {
            what: "k",
            value: k as i64,
            range: "2..=10",
        });
    }
    let trials = trials.max(1);
    let basis = build_basis(n, k)?;
    let origin = vec![0.0; n];
    let rel = cfg.relative_resolution;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..trials {
        let c = crate::sampling::random_unit(basis.len(), &mut rng);
        let th = theta_at(&basis.combine(&c), &origin, 1.0, cfg);
        if best.as_ref().is_none_or(|b| th < b.0) {
            best = Some((th, c));
        }
    }
    let (mut value, mut coefs) = best.expect("at least one trial");
    if cfg.refine_evals > 0 && basis.len() > 1 {
        let nm = NelderMead {
            step: 0.1,
            max_evals: cfg.refine_evals,
            ftol: 1e-4,
            xtol: 1e-4,
        };
        let run = nm.minimize(|c| theta_at(&basis.combine(c), &origin, 1.0, cfg), &coefs);
        if run.value < value {
            value = run.value;
            let s = norm(&run.x);
            coefs = run.x.iter().map(|v| v / s).collect();
        }
    }
    let minimizer = basis.combine(&coefs);
    let scale_check = [0.5, 1.0, 2.0]
        .iter()
        .map(|&r| (r, theta_at(&minimizer, &origin, r, cfg)))
        .collect();
    Ok(DeltaEstimate {
        kind: DeltaKind::DeltaPrime,
        n,
        degree: k,
        value,
        minimizer,
        witness_root: origin,
        witness_scale: 1.0,
        trials,
        seed,
        relative_resolution: rel,
        scale_check,
    })
}

/// Scales at which singular roots are probed.
pub const DELTA_SCALES: [f64; 3] = [4.0, 1.0, 0.25];

/// A harmonic polynomial with a singular root: harmonic parts of degrees
/// `2..=d` about a dyadic point `x0 ∈ [-1/2, 1/2]^n`, returned as `(h, x0)`.
pub fn random_singular_root<R: Rng>(n: usize, d: u32, rng: &mut R) -> Result<(Polynomial, Vec<f64>)> {
    let basis = stacked_basis(n, 2, d)?;
    let c: Vec<f64> = (0..basis.len()).map(|_| rng.sample(StandardNormal)).collect();
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-8i32..=8) as f64 / 16.0).collect();
    singular_from(&basis, &c, &x0).map(|h| (h, x0))
}

fn singular_from(basis: &[Polynomial], c: &[f64], x0: &[f64]) -> Result<Polynomial> {
    let local = combine(basis, c);
    let shift: Vec<f64> = x0.iter().map(|v| -v).collect();
    local.recenter(&shift)
}

/// Smallest measured `θ_{Σ_h}(x, r)` over random harmonic `h` of degree
/// `<= d` with a singular root `x` and `r ∈ {1/4, 1, 4}`.
pub fn estimate_delta(n: usize, d: u32, trials: usize, seed: u64) -> Result<DeltaEstimate> {
    estimate_delta_with(n, d, trials, seed, &DeltaConfig::for_dim(n))
}

pub fn estimate_delta_with(
    n: usize,
    d: u32,
    trials: usize,
    seed: u64,
    cfg: &DeltaConfig,
) -> Result<DeltaEstimate> {
    check_dim(n)?;
    if !(2..=MAX_HARMONIC_DEGREE).contains(&d) {
        return Err(FlatError::OutOfRange {
            what: "d",
            value: d as i64,
            range: "2..=10",
        });
    }
    let trials = trials.max(1);
    let basis = stacked_basis(n, 2, d)?;
    let rel = cfg.relative_resolution;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let worst = |h: &Polynomial, x0: &[f64]| -> (f64, f64) {
        DELTA_SCALES
            .iter()
            .map(|&r| (theta_at(h, x0, r, cfg), r))
            .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a })
    };
    let mut best: Option<(f64, f64, Vec<f64>, Vec<f64>)> = None;
    for _ in 0..trials {
        let c: Vec<f64> = (0..basis.len()).map(|_| rng.sample(StandardNormal)).collect();
        let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-8i32..=8) as f64 / 16.0).collect();
        let h = singular_from(&basis, &c, &x0)?;
        let (th, r) = worst(&h, &x0);
        if best.as_ref().is_none_or(|b| th < b.0) {
            best = Some((th, r, c, x0));
        }
    }
    let (mut value, mut scale, mut coefs, x0) = best.expect("at least one trial");
    if cfg.refine_evals > 0 && basis.len() > 1 {
        let nm = NelderMead {
            step: 0.2 * norm(&coefs) / (basis.len() as f64).sqrt(),
            max_evals: cfg.refine_evals,
            ftol: 1e-4,
            xtol: 1e-4,
        };
        let run = nm.minimize(
            |c| match singular_from(&basis, c, &x0) {
                Ok(h) if !h.is_constant() => worst(&h, &x0).0,
                _ => f64::INFINITY,
            },
            &coefs,
        );
        if run.value < value {
            let h = singular_from(&basis, &run.x, &x0)?;
            let (th, r) = worst(&h, &x0);
            if th < value {
                value = th;
                scale = r;
                coefs = run.x;
            }
        }
    }
    Ok(DeltaEstimate {
        kind: DeltaKind::Delta,
        n,
        degree: d,
        value,
        minimizer: singular_from(&basis, &coefs, &x0)?,
        witness_root: x0,
        witness_scale: scale,
        trials,
        seed,
        relative_resolution: rel,
        scale_check: Vec::new(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub labels: Vec<Classification>,
    /// Smallest `θ` seen over the scale grid, per point (up to the first flat scale).
    pub min_theta: Vec<f64>,
    /// `|∇p|` at each point when the generator is known.
    pub gradient_norms: Option<Vec<f64>>,
    /// Fraction of points where the label matches `|∇p| > tol`.
    pub oracle_agreement: Option<f64>,
    pub eta_used: f64,
    pub delta_used: f64,
    pub d: u32,
    pub flat_fraction: f64,
    pub scale_grid: Vec<f64>,
}

/// Geometric scale grid `4·res, 8·res, ...` up to `max_scale`, largest first.
pub fn default_scale_grid(resolution: f64, max_scale: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut s = 4.0 * resolution;
    while s <= max_scale * (1.0 + 1e-12) {
        v.push(s);
        s *= 2.0;
    }
    v.reverse();
    v
}

/// Normal of the least-squares plane through `z` fitted to `A ∩ B(z, s)`.
fn principal_normal(a: &SampledSet, z: &[f64], s: f64) -> Option<Vec<f64>> {
    let n = a.dim();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in a.tree().within(z, s) {
        let y = a.point(i);
        for p in 0..n {
            for q in 0..n {
                m[(p, q)] += (y[p] - z[p]) * (y[q] - z[q]);
            }
        }
    }
    let eig = SymmetricEigen::new(m);
    let (imin, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))?;
    let v: Vec<f64> = eig.eigenvectors.column(imin).iter().copied().collect();
    (norm(&v) > 0.5).then_some(v)
}

/// Labels one point: flat iff `θ_A(z, s) < eta / 8` at some scale of the grid.
/// The least-squares plane is tried first since it certifies most flat points.
fn label_point(a: &SampledSet, z: &[f64], eta: f64, scales_ascending: &[f64]) -> (Classification, f64) {
    let mut min = f64::INFINITY;
    for &s in scales_ascending {
        if let Some(nu) = principal_normal(a, z, s) {
            if let Ok(ub) = flatness_for_normal(a, z, s, &nu) {
                min = min.min(ub);
                if ub < eta / 8.0 {
                    return (Classification::Flat, min);
                }
            }
        }
        if let Ok(rep) = local_flatness(a, z, s, FlatnessSearch::Grid) {
            min = min.min(rep.theta);
            if rep.theta < eta / 8.0 {
                return (Classification::Flat, min);
            }
        }
    }
    (Classification::Singular, min)
}

fn gradient_tolerance(p: &Polynomial, a: &SampledSet) -> f64 {
    let q = p.recenter(a.center()).unwrap_or_else(|_| p.clone());
    1e-6 * q.l1_bound(a.radius()) / a.radius()
}

/// Splits the samples into flat and singular points using the smallest
/// tested scale at which the set looks flat.
pub fn partition_gamma(
    a: &SampledSet,
    d: u32,
    eta: f64,
    delta: f64,
    scale_grid: &[f64],
) -> Result<PartitionResult> {
    check_positive("eta", eta)?;
    if a.is_empty() {
        return Err(FlatError::EmptySet("partition needs a nonempty set"));
    }
    let floor = 4.0 * a.resolution();
    let min_scale = scale_grid.iter().copied().fold(f64::INFINITY, f64::min);
    if scale_grid.is_empty() || min_scale < floor * (1.0 - 1e-12) {
        return Err(FlatError::ScaleGridTooFine { min_scale, floor });
    }
    let mut asc = scale_grid.to_vec();
    asc.sort_by(f64::total_cmp);
    asc.dedup();
    let mut labels = Vec::with_capacity(a.len());
    let mut mins = Vec::with_capacity(a.len());
    for z in a.points() {
        let (l, m) = label_point(a, z, eta, &asc);
        labels.push(l);
        mins.push(m);
    }
    let flat = labels.iter().filter(|l| **l == Classification::Flat).count();
    let (gradient_norms, oracle_agreement) = match &a.generator {
        Some(g) => {
            let tol = gradient_tolerance(g, a);
            let ev = Evaluator::new(g);
            let mut buf = vec![0.0; a.dim()];
            let norms: Vec<f64> = a
                .points()
                .map(|z| {
                    ev.value_and_gradient(z, &mut buf);
                    norm(&buf)
                })
                .collect();
            let agree = labels
                .iter()
                .zip(&norms)
                .filter(|(l, g)| (**l == Classification::Flat) == (**g > tol))
                .count();
            (Some(norms), Some(agree as f64 / labels.len() as f64))
        }
        None => (None, None),
    };
    Ok(PartitionResult {
        flat_fraction: flat as f64 / labels.len() as f64,
        labels,
        min_theta: mins,
        gradient_norms,
        oracle_agreement,
        eta_used: eta,
        delta_used: delta,
        d,
        scale_grid: asc.into_iter().rev().collect(),
    })
}

impl PartitionResult {
    /// CSV rows `x0..,label,min_theta[,gradient_norm]`.
    pub fn to_csv(&self, a: &SampledSet) -> String {
        let n = a.dim();
        let mut out = String::new();
        let mut header: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        header.push("label".into());
        header.push("min_theta".into());
        if self.gradient_norms.is_some() {
            header.push("gradient_norm".into());
        }
        out.push_str(&header.join(","));
        out.push('\n');
        for (i, z) in a.points().enumerate() {
            let mut row: Vec<String> = z.iter().map(|v| format!("{v}")).collect();
            row.push(match self.labels[i] {
                Classification::Flat => "flat".into(),
                Classification::Singular => "singular".into(),
            });
            row.push(format!("{}", self.min_theta[i]));
            if let Some(g) = &self.gradient_norms {
                row.push(format!("{}", g[i]));
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpennessConfig {
    pub eta: f64,
    pub delta: f64,
    /// Scales used to certify the base root as flat, decreasing.
    pub root_scales: Vec<f64>,
    /// Sampling resolution as a fraction of each root scale.
    pub relative_resolution: f64,
    /// Absolute resolution for the neighbourhood sample.
    pub resolution: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpennessRow {
    pub radius: f64,
    pub neighbors: usize,
    pub flat: usize,
    pub all_flat: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpennessReport {
    pub root: Vec<f64>,
    pub rows: Vec<OpennessRow>,
    /// Largest tested radius whose neighbouring roots are all flat (0 if none).
    pub flat_radius: f64,
}

/// Labels the roots near a flat root and reports how far flatness persists.
pub fn openness_probe(
    h: &Polynomial,
    flat_root: &[f64],
    radii: &[f64],
    cfg: &OpennessConfig,
) -> Result<OpennessReport> {
    let verdict = classify_root(h, flat_root, cfg.delta, &cfg.root_scales, cfg.relative_resolution)?;
    if verdict.classification != Classification::Flat {
        return Err(FlatError::RootNotFlat);
    }
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    let rmax = *radii.last().ok_or(FlatError::EmptySet("no probe radii"))?;
    check_positive("radius", rmax)?;
    let grid = default_scale_grid(cfg.resolution, rmax.max(8.0 * cfg.resolution));
    let smax = grid.first().copied().unwrap_or(0.0);
    let a = sample_zero_set(h, flat_root, rmax + smax, cfg.resolution)?;
    let mut asc = grid.clone();
    asc.reverse();
    let mut labelled: Vec<(f64, Classification)> = a
        .points()
        .map(|z| dist2(z, flat_root).sqrt())
        .zip(a.points())
        .filter(|(d, _)| *d <= rmax)
        .map(|(d, z)| (d, label_point(&a, z, cfg.eta, &asc).0))
        .collect();
    labelled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut rows = Vec::new();
    for &rad in &radii {
        let within: Vec<_> = labelled.iter().filter(|(d, _)| *d <= rad).collect();
        let flat = within.iter().filter(|(_, l)| *l == Classification::Flat).count();
        let all_flat = flat == within.len();
        rows.push(OpennessRow {
            radius: rad,
            neighbors: within.len(),
            flat,
            all_flat,
        });
    }
    // Only radii before the first failure count.
    let flat_radius = rows
        .iter()
        .take_while(|r| r.all_flat)
        .map(|r| r.radius)
        .fold(0.0, f64::max);
    Ok(OpennessReport {
        root: flat_root.to_vec(),
        rows,
        flat_radius,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleTransferReport {
    pub theta_x: f64,
    pub theta_y: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Checks `θ_A(y, s r) <= 4 θ_A(x, r) / s + 5 res / (s r)` for `y ∈ A` with
/// `B(y, s r) ⊂ B(x, r)`.
pub fn scale_transfer_check(
    a: &SampledSet,
    x: &[f64],
    r: f64,
    y: &[f64],
    s: f64,
) -> Result<ScaleTransferReport> {
    check_positive("radius", r)?;
    if !(s > 0.0 && s <= 1.0) {
        return Err(FlatError::InvalidParameter {
            what: "s",
            value: s,
            expected: "0 < s <= 1",
        });
    }
    if dist2(x, y).sqrt() + s * r > r * (1.0 + 1e-12) {
        return Err(FlatError::ContainmentViolated);
    }
    let gap = a.tree().distance(y);
    if gap > a.resolution() {
        return Err(FlatError::InvalidParameter {
            what: "distance from y to the set",
            value: gap,
            expected: "at most the resolution",
        });
    }
    let tx = local_flatness(a, x, r, FlatnessSearch::Multistart)?.theta;
    let ty = local_flatness(a, y, s * r, FlatnessSearch::Multistart)?.theta;
    let rhs = 4.0 * tx / s + 5.0 * a.resolution() / (s * r);
    Ok(ScaleTransferReport {
        theta_x: tx,
        theta_y: ty,
        rhs,
        pass: ty <= rhs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropagationStatus {
    Held,
    PremiseFalse,
    Violated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationReport {
    pub theta_r: f64,
    pub curve: Vec<(f64, f64)>,
    pub status: PropagationStatus,
}

/// If `θ(x, r) < eta`, checks `θ(x, r') < delta` for every tested `r' <= r`.
pub fn flatness_propagation_check(
    h: &Polynomial,
    x: &[f64],
    r: f64,
    eta: f64,
    delta: f64,
    scales: &[f64],
    relative_resolution: f64,
) -> Result<PropagationReport> {
    check_positive("radius", r)?;
    check_decreasing(scales)?;
    if scales[0] > r * (1.0 + 1e-12) {
        return Err(FlatError::InvalidParameter {
            what: "largest scale",
            value: scales[0],
            expected: "at most r",
        });
    }
    recenter_at_root(h, x, r)?;
    let theta_r = theta_curve(h, x, &[r], relative_resolution)?[0].1;
    if theta_r >= eta {
        return Ok(PropagationReport {
            theta_r,
            curve: Vec::new(),
            status: PropagationStatus::PremiseFalse,
        });
    }
    let curve = theta_curve(h, x, scales, relative_resolution)?;
    let ok = curve.iter().all(|c| c.1 < delta);
    Ok(PropagationReport {
        theta_r,
        curve,
        status: if ok {
            PropagationStatus::Held
        } else {
            PropagationStatus::Violated
        },
    })
}

/// Smallest Hausdorff distance at unit scale between zero sets of random
/// homogeneous harmonics of degrees `k1` and `k2`. Exploratory only.
pub fn degree_separation(
    n: usize,
    k1: u32,
    k2: u32,
    trials: usize,
    seed: u64,
    relative_resolution: f64,
) -> Result<f64> {
    let b1 = build_basis(n, k1)?;
    let b2 = build_basis(n, k2)?;
    let origin = vec![0.0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..trials.max(1) {
        let h1 = random_unit_homogeneous(&b1, &mut rng);
        let h2 = random_unit_homogeneous(&b2, &mut rng);
        let s1 = sample_zero_set(&h1, &origin, 1.0, relative_resolution)?;
        let s2 = sample_zero_set(&h2, &origin, 1.0, relative_resolution)?;
        best = best.min(crate::geometry::hausdorff_distance(&s1, &s2)?);
    }
    Ok(best)
}
