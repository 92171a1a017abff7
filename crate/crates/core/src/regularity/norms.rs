//! Sup norms of polynomials over balls and spheres.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Result};
use crate::poly::{Evaluator, Polynomial};
use crate::sampling::{ball_points, dot, norm, sphere_points};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupMode {
    /// Dense quasi-uniform sampling only.
    Grid,
    /// Grid seeds followed by projected gradient ascent.
    Refined,
}

/// Number of grid samples used for sup norms in dimension `n`.
pub fn sup_grid_size(n: usize) -> usize {
    if n <= 3 {
        20_000
    } else {
        100_000
    }
}

const ASCENT_SEEDS: usize = 8;

static SPHERE_GRID: [OnceLock<Vec<f64>>; 4] = [const { OnceLock::new() }; 4];
static BALL_GRID: [OnceLock<Vec<f64>>; 4] = [const { OnceLock::new() }; 4];

fn sphere_grid(n: usize) -> &'static [f64] {
    SPHERE_GRID[n - 2].get_or_init(|| sphere_points(n, sup_grid_size(n), 0x5b_11))
}

fn ball_grid(n: usize) -> &'static [f64] {
    BALL_GRID[n - 2].get_or_init(|| {
        let mut g = ball_points(n, sup_grid_size(n), 0xba_11);
        g.extend_from_slice(&sphere_points(n, sup_grid_size(n) / 4, 0xba_12));
        g
    })
}

/// Indices of the `k` largest values, ties by index.
fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Maximizes `|p|` on the unit sphere from `x0` by Riemannian gradient ascent.
fn ascend_sphere(ev: &Evaluator, x0: &[f64]) -> f64 {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut f = ev.value_and_gradient(&x, &mut g).abs();
    let mut alpha = 0.1;
    for _ in 0..200 {
        let v = ev.value_and_gradient(&x, &mut g);
        let sgn = v.signum();
        let radial = dot(&g, &x);
        let t: Vec<f64> = g.iter().zip(&x).map(|(gi, xi)| sgn * (gi - radial * xi)).collect();
        let tn = norm(&t);
        if tn <= 1e-15 * (1.0 + f) {
            break;
        }
        let mut improved = false;
        for _ in 0..40 {
            let mut y: Vec<f64> = x.iter().zip(&t).map(|(a, b)| a + alpha * b / tn).collect();
            let ny = norm(&y);
            y.iter_mut().for_each(|v| *v /= ny);
            let fy = ev.value(&y).abs();
            if fy > f {
                let gain = fy - f;
                x = y;
                f = fy;
                alpha = (alpha * 1.5).min(0.5);
                improved = gain > 1e-16 * f;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    f
}

/// Maximizes `|p|` on the closed unit ball from `x0` by projected gradient ascent.
fn ascend_ball(ev: &Evaluator, x0: &[f64]) -> f64 {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut f = ev.value(&x).abs();
    let mut alpha = 0.1;
    for _ in 0..300 {
        let v = ev.value_and_gradient(&x, &mut g);
        let gn = norm(&g);
        if gn == 0.0 {
            break;
        }
        let sgn = v.signum();
        let mut improved = false;
        for _ in 0..40 {
            let mut y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + alpha * sgn * b / gn).collect();
            let ny = norm(&y);
            if ny > 1.0 {
                y.iter_mut().for_each(|v| *v /= ny);
            }
            let fy = ev.value(&y).abs();
            if fy > f {
                let gain = fy - f;
                x = y;
                f = fy;
                alpha = (alpha * 1.5).min(0.5);
                improved = gain > 1e-16 * f;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    f
}

/// `max |p|` on the unit sphere: grid seeds refined by gradient ascent.
///
/// For homogeneous `p` this is also the sup over the unit ball, and
/// `‖p‖_{B_r} = r^{deg p} ‖p‖_{S^{n-1}}`.
pub fn sphere_sup(p: &Polynomial) -> f64 {
    if p.is_zero() {
        return 0.0;
    }
    let n = p.dim();
    let ev = Evaluator::new(p);
    let grid = sphere_grid(n);
    let vals: Vec<f64> = grid.chunks(n).map(|x| ev.value(x).abs()).collect();
    let mut best = vals.iter().copied().fold(0.0, f64::max);
    for i in top_k(&vals, ASCENT_SEEDS) {
        best = best.max(ascend_sphere(&ev, &grid[i * n..(i + 1) * n]));
    }
    best
}

/// `max |p|` over the closed ball `B(0, radius)`.
pub fn sup_norm_ball(p: &Polynomial, radius: f64, mode: SupMode) -> Result<f64> {
    check_positive("radius", radius)?;
    if p.is_zero() {
        return Ok(0.0);
    }
    let n = p.dim();
    // Work on the unit ball.
    let q = p.dilate(radius)?;
    let ev = Evaluator::new(&q);
    let grid = ball_grid(n);
    let vals: Vec<f64> = grid.chunks(n).map(|x| ev.value(x).abs()).collect();
    let grid_max = vals.iter().copied().fold(0.0, f64::max);
    match mode {
        SupMode::Grid => Ok(grid_max),
        SupMode::Refined => {
            let mut best = grid_max;
            for i in top_k(&vals, ASCENT_SEEDS) {
                best = best.max(ascend_ball(&ev, &grid[i * n..(i + 1) * n]));
            }
            Ok(best)
        }
    }
}
