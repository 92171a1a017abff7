//! Deterministic quasi-uniform point sets on spheres, balls and half-spheres.
//!
//! All sets are returned as flat coordinate buffers (`count * dim` values).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

/// Additive recurrence step for the `d`-dimensional R-sequence: the powers
/// `1/φ_d^j` of the unique positive root of `x^{d+1} = x + 1`.
fn r_sequence_alpha(d: usize) -> Vec<f64> {
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    (1..=d).map(|j| phi.powi(-(j as i32)).fract()).collect()
}

/// Infinite low-discrepancy sequence in `[0,1)^d` with a seeded random shift.
pub struct RSequence {
    alpha: Vec<f64>,
    state: Vec<f64>,
}

impl RSequence {
    pub fn new(d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_a11);
        let state = (0..d).map(|_| rng.random::<f64>()).collect();
        RSequence {
            alpha: r_sequence_alpha(d),
            state,
        }
    }

    pub fn next_into(&mut self, out: &mut [f64]) {
        for (i, s) in self.state.iter_mut().enumerate() {
            *s = (*s + self.alpha[i]).fract();
            out[i] = *s;
        }
    }
}

/// `count` points on the unit circle / sphere `S^{dim-1}`.
///
/// Circle: equally spaced angles. 2-sphere: Fibonacci lattice. Higher
/// dimensions: a shifted R-sequence pushed through Box–Muller and normalized.
pub fn sphere_points(dim: usize, count: usize, seed: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(dim * count);
    match dim {
        2 => {
            for i in 0..count {
                let a = 2.0 * PI * i as f64 / count as f64;
                out.extend_from_slice(&[a.cos(), a.sin()]);
            }
        }
        3 => {
            for i in 0..count {
                let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
                let rho = (1.0 - z * z).max(0.0).sqrt();
                let a = GOLDEN_ANGLE * i as f64;
                out.extend_from_slice(&[rho * a.cos(), rho * a.sin(), z]);
            }
        }
        _ => {
            let pairs = dim.div_ceil(2);
            let mut seq = RSequence::new(2 * pairs, seed);
            let mut u = vec![0.0; 2 * pairs];
            let mut g = vec![0.0; 2 * pairs];
            let mut produced = 0;
            while produced < count {
                seq.next_into(&mut u);
                for j in 0..pairs {
                    let r = (-2.0 * (1.0 - u[2 * j]).ln()).sqrt();
                    let a = 2.0 * PI * u[2 * j + 1];
                    g[2 * j] = r * a.cos();
                    g[2 * j + 1] = r * a.sin();
                }
                let norm = g[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm < 1e-9 {
                    continue;
                }
                out.extend(g[..dim].iter().map(|v| v / norm));
                produced += 1;
            }
        }
    }
    out
}

/// Flips `v` so that its first coordinate of magnitude above `1e-12` is positive.
pub fn canonical_orientation(v: &mut [f64]) {
    if let Some(&c) = v.iter().find(|c| c.abs() > 1e-12) {
        if c < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Unit normals covering the projective space of hyperplane directions,
/// each in canonical orientation.
///
/// Circle: `count` angles over `[0, π)`. 2-sphere: Fibonacci lattice on the
/// upper hemisphere. Higher dimensions: sphere points folded onto a half-sphere.
pub fn half_sphere_normals(dim: usize, count: usize, seed: u64) -> Vec<f64> {
    let mut out = match dim {
        2 => {
            let mut v = Vec::with_capacity(2 * count);
            for i in 0..count {
                let a = PI * i as f64 / count as f64;
                v.extend_from_slice(&[a.cos(), a.sin()]);
            }
            v
        }
        3 => {
            let mut v = Vec::with_capacity(3 * count);
            for i in 0..count {
                let z = 1.0 - (i as f64 + 0.5) / count as f64;
                let rho = (1.0 - z * z).max(0.0).sqrt();
                let a = GOLDEN_ANGLE * i as f64;
                v.extend_from_slice(&[rho * a.cos(), rho * a.sin(), z]);
            }
            v
        }
        _ => sphere_points(dim, count, seed),
    };
    for c in out.chunks_mut(dim) {
        canonical_orientation(c);
    }
    out
}

/// `count` points in the closed unit ball.
///
/// Disc: Vogel spiral. Higher dimensions: shifted R-sequence in the cube,
/// rejection-filtered to the ball.
pub fn ball_points(dim: usize, count: usize, seed: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(dim * count);
    if dim == 2 {
        for i in 0..count {
            let r = ((i as f64 + 0.5) / count as f64).sqrt();
            let a = GOLDEN_ANGLE * i as f64;
            out.extend_from_slice(&[r * a.cos(), r * a.sin()]);
        }
        return out;
    }
    let mut seq = RSequence::new(dim, seed);
    let mut u = vec![0.0; dim];
    let mut produced = 0;
    while produced < count {
        seq.next_into(&mut u);
        let mut s = 0.0;
        for v in u.iter_mut() {
            *v = 2.0 * *v - 1.0;
            s += *v * *v;
        }
        if s <= 1.0 {
            out.extend_from_slice(&u);
            produced += 1;
        }
    }
    out
}

/// A random unit vector drawn from the rotation-invariant distribution.
pub fn random_unit<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let n = norm(&v);
        if n > 1e-9 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormal basis of the complement of the unit vector `normal`
/// (Householder reflection), returned as `dim - 1` rows of length `dim`.
pub fn complement_basis(normal: &[f64]) -> Vec<Vec<f64>> {
    let n = normal.len();
    // Reflect e_k onto ±normal, with k the coordinate of largest magnitude.
    let k = (0..n)
        .max_by(|&a, &b| normal[a].abs().total_cmp(&normal[b].abs()))
        .unwrap();
    let s = if normal[k] >= 0.0 { 1.0 } else { -1.0 };
    let mut v = normal.to_vec();
    v[k] += s;
    let vv = dot(&v, &v);
    let mut rows = Vec::with_capacity(n - 1);
    for j in (0..n).filter(|&j| j != k) {
        // H e_j = e_j - 2 v v_j / (v.v)
        let f = 2.0 * v[j] / vv;
        let row: Vec<f64> = (0..n)
            .map(|i| if i == j { 1.0 } else { 0.0 } - f * v[i])
            .collect();
        rows.push(row);
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_points_are_unit() {
        for dim in 2..=5 {
            let pts = sphere_points(dim, 500, 1);
            assert_eq!(pts.len(), dim * 500);
            for p in pts.chunks(dim) {
                assert!((norm(p) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sphere_points_cover_all_orthants() {
        for dim in 3..=5 {
            let pts = sphere_points(dim, 4000, 9);
            let mut seen = vec![false; 1 << dim];
            for p in pts.chunks(dim) {
                let idx = p.iter().enumerate().fold(0, |acc, (i, v)| acc | ((*v > 0.0) as usize) << i);
                seen[idx] = true;
            }
            assert!(seen.iter().all(|&s| s), "dim {dim}");
        }
    }

    #[test]
    fn ball_points_inside_and_spread() {
        for dim in 2..=5 {
            let pts = ball_points(dim, 2000, 3);
            let mut mean = vec![0.0; dim];
            for p in pts.chunks(dim) {
                assert!(norm(p) <= 1.0 + 1e-12);
                for i in 0..dim {
                    mean[i] += p[i] / 2000.0;
                }
            }
            assert!(norm(&mean) < 0.05, "dim {dim}: {mean:?}");
        }
    }

    #[test]
    fn complement_basis_is_orthonormal() {
        for normal in [vec![0.0, 1.0], vec![0.6, -0.8], vec![1.0, 2.0, -2.0], vec![0.5, 0.5, 0.5, -0.5]] {
            let nn = norm(&normal);
            let normal: Vec<f64> = normal.iter().map(|v| v / nn).collect();
            let rows = complement_basis(&normal);
            assert_eq!(rows.len(), normal.len() - 1);
            for (i, r) in rows.iter().enumerate() {
                assert!(dot(r, &normal).abs() < 1e-14);
                for (j, s) in rows.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(r, s) - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn canonical_orientation_flips() {
        let mut v = vec![0.0, -1.0, 2.0];
        canonical_orientation(&mut v);
        assert_eq!(v, vec![0.0, 1.0, -2.0]);
    }
}
