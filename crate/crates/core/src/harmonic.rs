//! Homogeneous harmonic polynomials: bases, random draws and empirical
//! Lipschitz constants of their restrictions to the unit sphere.
//!
//! A harmonic `h` of degree `k` is written as `Σ_j t^j P_j(y)` with `t` the
//! last coordinate and `y` the others. `Δh = 0` is equivalent to the
//! recursion `(j+2)(j+1) P_{j+2} = -Δ_y P_j`, so `P_0` (degree `k`) and `P_1`
//! (degree `k-1`) can be chosen freely. Taking them to be single monomials
//! yields a basis whose size is
//! `C(n+k-1, k) - C(n+k-3, k-2)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, FlatError, Result};
use crate::optim::NelderMead;
use crate::poly::{binomial, multi_indices, Evaluator, MultiIndex, Polynomial};
use crate::regularity::sphere_sup;
use crate::sampling::{dist2, dot, norm, sphere_points};

/// Largest degree accepted by [`build_basis`] and [`random_harmonic`].
pub const MAX_HARMONIC_DEGREE: u32 = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicBasis {
    pub dim: usize,
    pub degree: u32,
    /// Homogeneous harmonic polynomials of degree `degree`, each with unit
    /// Euclidean coefficient norm.
    pub elements: Vec<Polynomial>,
}

/// Dimension of the space of homogeneous harmonic polynomials of degree `k` in `n` variables.
pub fn harmonic_dimension(n: usize, k: u32) -> usize {
    let n = n as u32;
    let all = binomial(n + k - 1, k);
    let lower = if k >= 2 { binomial(n + k - 3, k - 2) } else { 0.0 };
    (all - lower) as usize
}

fn check_degree(k: u32, min: u32) -> Result<()> {
    if (min..=MAX_HARMONIC_DEGREE).contains(&k) {
        Ok(())
    } else {
        Err(FlatError::OutOfRange {
            what: "degree",
            value: k as i64,
            range: if min == 0 { "0..=10" } else { "1..=10" },
        })
    }
}

/// Multiplies `p` by `x_axis^j`.
fn shift(p: &Polynomial, axis: usize, j: u32) -> Polynomial {
    let terms = p.terms().map(|(a, c)| {
        let mut e = a.exponents().to_vec();
        e[axis] += j;
        (MultiIndex::new(e), c)
    });
    Polynomial::from_terms(p.dim(), terms).expect("degree stays within bounds")
}

/// Completes the harmonic extension `Σ_j t^j P_j` from the free data `P_0`, `P_1`.
fn extend(dim: usize, k: u32, p0: Polynomial, p1: Polynomial) -> Polynomial {
    let t = dim - 1;
    let mut parts = vec![p0, p1];
    for j in 0..=k as usize {
        if j + 2 > k as usize {
            break;
        }
        let next = parts[j].laplacian().scaled(-1.0 / ((j + 2) * (j + 1)) as f64);
        parts.push(next);
    }
    let mut h = Polynomial::zero(dim);
    for (j, pj) in parts.iter().enumerate() {
        if !pj.is_zero() {
            h = &h + &shift(pj, t, j as u32);
        }
    }
    h
}

/// Basis of homogeneous harmonic polynomials of degree `k` in `n` variables.
pub fn build_basis(n: usize, k: u32) -> Result<HarmonicBasis> {
    check_dim(n)?;
    check_degree(k, 1)?;
    Ok(basis_unchecked(n, k))
}

fn basis_unchecked(n: usize, k: u32) -> HarmonicBasis {
    let m = n - 1;
    let lift = |a: &MultiIndex| {
        let mut e = a.exponents().to_vec();
        e.push(0);
        Polynomial::from_terms(n, [(MultiIndex::new(e), 1.0)]).unwrap()
    };
    let mut elements = Vec::new();
    let monos = |deg: u32| -> Vec<MultiIndex> {
        if m == 1 {
            vec![MultiIndex::new(vec![deg])]
        } else {
            multi_indices(m, deg)
        }
    };
    for a in monos(k) {
        elements.push(extend(n, k, lift(&a), Polynomial::zero(n)));
    }
    if k >= 1 {
        for a in monos(k - 1) {
            elements.push(extend(n, k, Polynomial::zero(n), lift(&a)));
        }
    }
    for e in elements.iter_mut() {
        let s = e.terms().map(|(_, c)| c * c).sum::<f64>().sqrt();
        *e = e.scaled(1.0 / s);
    }
    HarmonicBasis {
        dim: n,
        degree: k,
        elements,
    }
}

impl HarmonicBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `Σ_i c_i e_i`.
    pub fn combine(&self, coefs: &[f64]) -> Polynomial {
        assert_eq!(coefs.len(), self.elements.len());
        let mut out = Polynomial::zero(self.dim);
        for (c, e) in coefs.iter().zip(&self.elements) {
            if *c != 0.0 {
                out = &out + &e.scaled(*c);
            }
        }
        out
    }
}

/// Bases for degrees `lo..=hi` concatenated; degree 0 contributes the constant 1.
pub fn stacked_basis(n: usize, lo: u32, hi: u32) -> Result<Vec<Polynomial>> {
    check_dim(n)?;
    check_degree(hi, 0)?;
    let mut out = Vec::new();
    for k in lo..=hi {
        if k == 0 {
            out.push(Polynomial::constant(n, 1.0));
        } else {
            out.extend(basis_unchecked(n, k).elements);
        }
    }
    Ok(out)
}

/// Random harmonic polynomial of degree exactly `d` with standard-normal
/// coefficients over the harmonic bases of degrees `0..=d` (or `1..=d`
/// when `vanish_at_origin`).
pub fn random_harmonic(n: usize, d: u32, seed: u64, vanish_at_origin: bool) -> Result<Polynomial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_harmonic_with(n, d, vanish_at_origin, &mut rng)
}

pub fn random_harmonic_with<R: Rng>(
    n: usize,
    d: u32,
    vanish_at_origin: bool,
    rng: &mut R,
) -> Result<Polynomial> {
    check_dim(n)?;
    check_degree(d, 1)?;
    let lo = if vanish_at_origin { 1 } else { 0 };
    let mut h = Polynomial::zero(n);
    for k in lo..=d {
        let part = if k == 0 {
            Polynomial::constant(n, rng.sample(StandardNormal))
        } else {
            let b = basis_unchecked(n, k);
            loop {
                let coefs: Vec<f64> = (0..b.len()).map(|_| rng.sample(StandardNormal)).collect();
                let p = b.combine(&coefs);
                if k < d || !p.is_zero() {
                    break p;
                }
            }
        };
        h = &h + &part;
    }
    Ok(h)
}

/// Homogeneous harmonic of degree `k` whose coefficient vector in the basis is
/// a uniformly random unit vector.
pub fn random_unit_homogeneous<R: Rng>(basis: &HarmonicBasis, rng: &mut R) -> Polynomial {
    let v = crate::sampling::random_unit(basis.len(), rng);
    basis.combine(&v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub dim: usize,
    pub degree: u32,
    /// Largest difference quotient found; a lower bound for the optimal constant.
    pub a_lower: f64,
    /// Unit vectors realizing `a_lower`.
    pub witness: (Vec<f64>, Vec<f64>),
    /// Polynomial realizing `a_lower`.
    pub witness_polynomial: Polynomial,
    pub trials: usize,
    pub seed: u64,
}

fn sphere_budget(n: usize) -> usize {
    match n {
        2 => 720,
        3 => 2000,
        _ => 4000,
    }
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let s = norm(v);
    v.iter().map(|x| x / s).collect()
}

/// `|h(a) - h(b)| / (sup_S |h| |a - b|)`, zero for coincident points.
pub fn difference_quotient(h: &Evaluator, sup: f64, a: &[f64], b: &[f64]) -> f64 {
    let d = dist2(a, b).sqrt();
    if d <= 1e-12 || sup == 0.0 {
        return 0.0;
    }
    (h.value(a) - h.value(b)).abs() / (sup * d)
}

/// Best difference quotient for a single homogeneous `h`.
pub fn lipschitz_ratio(h: &Polynomial, seed: u64) -> (f64, Vec<f64>, Vec<f64>) {
    let n = h.dim();
    let ev = Evaluator::new(h);
    let sup = sphere_sup(h);
    let pts = sphere_points(n, sphere_budget(n), seed);
    let mut grad = vec![0.0; n];

    // Near pairs: follow the tangential gradient at its largest.
    let tangential = |x: &[f64], grad: &mut Vec<f64>| -> (f64, Vec<f64>) {
        let v = ev.value_and_gradient(x, grad);
        let _ = v;
        let radial = dot(grad, x);
        let t: Vec<f64> = grad.iter().zip(x).map(|(g, xi)| g - radial * xi).collect();
        (norm(&t), t)
    };
    let mut scored: Vec<(f64, usize)> = pts
        .chunks(n)
        .enumerate()
        .map(|(i, x)| (tangential(x, &mut grad).0, i))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let nm = NelderMead {
        step: 0.05,
        max_evals: 300,
        ftol: 1e-14,
        xtol: 1e-10,
    };
    let mut best = (0.0, pts[..n].to_vec(), pts[..n].to_vec());
    for &(_, i) in scored.iter().take(4) {
        let x0 = &pts[i * n..(i + 1) * n];
        let mut g = vec![0.0; n];
        let m = nm.minimize(|v| -tangential(&normalized(v), &mut g).0, x0);
        let a = normalized(&m.x);
        let (tn, t) = tangential(&a, &mut g);
        if tn == 0.0 {
            continue;
        }
        let eps = 1e-5;
        let b = normalized(&a.iter().zip(&t).map(|(ai, ti)| ai + eps * ti / tn).collect::<Vec<_>>());
        let q = difference_quotient(&ev, sup, &a, &b);
        if q > best.0 {
            best = (q, a, b);
        }
    }

    // Far pairs: random pairs from the point set, best few refined by ascent.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfa12);
    let count = pts.len() / n;
    let mut pairs: Vec<(f64, usize, usize)> = (0..2000)
        .map(|_| {
            let i = rng.random_range(0..count);
            let j = rng.random_range(0..count);
            let q = difference_quotient(&ev, sup, &pts[i * n..(i + 1) * n], &pts[j * n..(j + 1) * n]);
            (q, i, j)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    for &(_, i, j) in pairs.iter().take(3) {
        let mut x0 = pts[i * n..(i + 1) * n].to_vec();
        x0.extend_from_slice(&pts[j * n..(j + 1) * n]);
        let m = nm.minimize(
            |v| -difference_quotient(&ev, sup, &normalized(&v[..n]), &normalized(&v[n..])),
            &x0,
        );
        let a = normalized(&m.x[..n]);
        let b = normalized(&m.x[n..]);
        let q = difference_quotient(&ev, sup, &a, &b);
        if q > best.0 {
            best = (q, a, b);
        }
    }
    best
}

/// Empirical lower bound for the uniform Lipschitz constant of degree-`k`
/// spherical harmonics in `n` variables.
pub fn estimate_lipschitz(n: usize, k: u32, trials: usize, seed: u64) -> Result<LipschitzEstimate> {
    check_dim(n)?;
    check_degree(k, 1)?;
    if trials == 0 {
        return Err(FlatError::OutOfRange {
            what: "trials",
            value: 0,
            range: ">= 1",
        });
    }
    let basis = basis_unchecked(n, k);
    let results: Vec<(f64, Vec<f64>, Vec<f64>, Polynomial)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(t as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
            let h = random_unit_homogeneous(&basis, &mut rng);
            let (q, a, b) = lipschitz_ratio(&h, trial_seed);
            (q, a, b, h)
        })
        .collect();
    // Max with ties going to the earliest trial.
    let best = results
        .into_iter()
        .reduce(|acc, r| if r.0 > acc.0 { r } else { acc })
        .unwrap();
    Ok(LipschitzEstimate {
        dim: n,
        degree: k,
        a_lower: best.0,
        witness: (best.1, best.2),
        witness_polynomial: best.3,
        trials,
        seed,
    })
}
