//! Local flatness: the scaled two-sided Hausdorff distance from a set to the
//! best hyperplane through a base point.
//!
//! For a candidate unit normal `ν`, with `Y` the sample rescaled to the unit
//! ball around the base point:
//!
//! * the set-to-plane side is `max_{y ∈ Y} |⟨y, ν⟩|`, computed exactly;
//! * the plane-to-set side is `sup_{w ∈ D_ν} dist(w, Y)` over the full unit
//!   disc `D_ν = ν^⊥ ∩ B_1`. The distance function is 1-Lipschitz, so a
//!   branch-and-bound over cubes in disc coordinates brackets the sup to
//!   within a quarter of the sampling resolution.
//!
//! Normals are swept over a quasi-uniform half-sphere grid in increasing
//! order of the exact side, which lets most of them be discarded without
//! touching the expensive side; the best few are then polished by downhill
//! simplex in tangent coordinates.

use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, FlatError, Result};
use crate::geometry::{
    check_decreasing, recenter_at_root, sample_recentered, Hyperplane, SampledSet,
};
use crate::optim::NelderMead;
use crate::poly::{Degree, Polynomial};
use crate::sampling::{canonical_orientation, complement_basis, dist2, dot, half_sphere_normals, norm};
use crate::spatial::KdTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlatnessSearch {
    /// Best normal of the quasi-uniform grid.
    Grid,
    /// Grid followed by simplex refinement of the best candidates.
    Multistart,
}

impl std::str::FromStr for FlatnessSearch {
    type Err = FlatError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(FlatnessSearch::Grid),
            "multistart" => Ok(FlatnessSearch::Multistart),
            _ => Err(FlatError::Parse {
                pos: 0,
                msg: format!("unknown search mode `{s}`"),
            }),
        }
    }
}

/// Number of grid normals swept in dimension `n`.
pub fn normal_grid_size(n: usize) -> usize {
    match n {
        2 => 1024,
        3 => 4096,
        4 => 8192,
        _ => 16384,
    }
}

const REFINE_CANDIDATES: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatnessReport {
    /// `max(sides) / radius`, clamped to `[0, 1]`.
    pub theta: f64,
    pub best_plane: Hyperplane,
    pub radius: f64,
    pub resolution: f64,
    /// `sup_{z ∈ S ∩ B} dist(z, plane)`.
    pub side_sup_set_to_plane: f64,
    /// `sup_{w ∈ plane ∩ B} dist(w, S ∩ B)`.
    pub side_sup_plane_to_set: f64,
    /// True when the raw value exceeded 1 and was clamped.
    pub clamped: bool,
}

#[derive(Clone, Copy, Debug)]
struct Score {
    j: f64,
    side1: f64,
    side2: f64,
}

/// The sample in unit coordinates around the base point.
pub(crate) struct FlatnessProblem {
    n: usize,
    pts: Vec<f64>,
    tree: KdTree,
    tol: f64,
    /// Sampling ball in unit coordinates when it does not cover the window;
    /// plane points outside it carry no information and are skipped.
    clip: Option<(Vec<f64>, f64)>,
}

#[derive(PartialEq)]
struct Cell {
    ub: f64,
    c: Vec<f64>,
    a: f64,
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.ub
            .total_cmp(&other.ub)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

impl FlatnessProblem {
    /// `set ∩ B(x, r)` rescaled to the unit ball; `None` if empty.
    pub(crate) fn new(set: &SampledSet, x: &[f64], r: f64) -> Option<Self> {
        let n = set.dim();
        let mut pts = Vec::new();
        for i in set.tree().within(x, r * (1.0 + 1e-12)) {
            pts.extend(set.point(i).iter().zip(x).map(|(a, b)| (a - b) / r));
        }
        if pts.is_empty() {
            return None;
        }
        let tree = KdTree::new(n, &pts);
        let cc: Vec<f64> = set.center().iter().zip(x).map(|(c, x)| (c - x) / r).collect();
        let rc = set.radius() / r;
        let clip = (norm(&cc) + 1.0 > rc * (1.0 + 1e-12)).then_some((cc, rc));
        Some(FlatnessProblem {
            n,
            pts,
            tree,
            tol: (set.resolution() / r / 4.0).max(1e-6),
            clip,
        })
    }

    fn side1(&self, nu: &[f64]) -> f64 {
        self.pts
            .chunks(self.n)
            .map(|y| dot(y, nu).abs())
            .fold(0.0, f64::max)
    }

    /// Lower bound for `sup_{w ∈ D_ν} dist(w, Y)`. Stops early once the
    /// sup is certified below `floor` or the bound reaches `cutoff`.
    fn side2(&self, nu: &[f64], floor: f64, cutoff: f64) -> f64 {
        let n = self.n;
        let m = n - 1;
        let basis = complement_basis(nu);
        let sqrt_m = (m as f64).sqrt();
        // The sampling ball meets the plane in a disc `|t - t0| <= rho`.
        let clip = self.clip.as_ref().map(|(cc, rc)| {
            let t0: Vec<f64> = basis.iter().map(|e| dot(e, cc)).collect();
            let h = dot(nu, cc);
            (t0, (rc * rc - h * h).max(0.0).sqrt(), rc * rc >= h * h)
        });
        if let Some((_, _, false)) = clip {
            return 0.0;
        }
        let mut w = vec![0.0; n];
        let mut eval = |t: &[f64]| -> f64 {
            for i in 0..n {
                w[i] = 0.0;
                for j in 0..m {
                    w[i] += t[j] * basis[j][i];
                }
            }
            self.tree.distance(&w)
        };
        let mut best = 0.0f64;
        let mut heap = BinaryHeap::new();
        let mut make = |c: Vec<f64>, a: f64, best: &mut f64| -> Option<Cell> {
            // Closest point of the cell to the origin must lie in the disc.
            let near: f64 = c.iter().map(|&ci| (ci.abs() - a).max(0.0).powi(2)).sum::<f64>();
            if near > 1.0 {
                return None;
            }
            let cn = norm(&c);
            let mut q: Vec<f64> = if cn > 1.0 { c.iter().map(|v| v / cn).collect() } else { c.clone() };
            let mut feasible = true;
            if let Some((t0, rho, _)) = &clip {
                let far: f64 = c
                    .iter()
                    .zip(t0)
                    .map(|(&ci, &ti)| ((ci - ti).abs() - a).max(0.0).powi(2))
                    .sum();
                if far > rho * rho {
                    return None;
                }
                let d = dist2(&q, t0).sqrt();
                if d > *rho {
                    // Pull the centre into the clip disc instead.
                    let dc = dist2(&c, t0).sqrt();
                    let p: Vec<f64> = if dc > *rho {
                        c.iter().zip(t0).map(|(ci, ti)| ti + (ci - ti) * rho / dc).collect()
                    } else {
                        c.clone()
                    };
                    feasible = norm(&p) <= 1.0 + 1e-12;
                    q = p;
                }
            }
            let fq = eval(&q);
            if feasible {
                *best = best.max(fq);
            }
            let off = dist2(&q, &c).sqrt();
            Some(Cell {
                ub: fq + off + a * sqrt_m,
                c,
                a,
            })
        };
        // Seed the bound with a ring of rim points.
        for k in 0..8 * m {
            let ang = std::f64::consts::TAU * k as f64 / (8 * m) as f64;
            let mut t = vec![0.0; m];
            t[0] = ang.cos();
            if m > 1 {
                t[1] = ang.sin();
            }
            let _ = make(t, 0.0, &mut best);
        }
        if let Some(root) = make(vec![0.0; m], 1.0, &mut best) {
            heap.push(root);
        }
        while let Some(cell) = heap.pop() {
            if best >= cutoff || cell.ub <= floor.max(best) + self.tol {
                break;
            }
            let b = cell.a / 2.0;
            for mask in 0..1usize << m {
                let c: Vec<f64> = (0..m)
                    .map(|i| cell.c[i] + if mask >> i & 1 == 1 { b } else { -b })
                    .collect();
                if let Some(child) = make(c, b, &mut best) {
                    if child.ub > floor.max(best) + self.tol {
                        heap.push(child);
                    }
                }
            }
        }
        best
    }

    fn score(&self, nu: &[f64], side1: f64, cutoff: f64) -> Score {
        let side2 = self.side2(nu, side1, cutoff);
        Score {
            j: side1.max(side2),
            side1,
            side2,
        }
    }

    fn score_normal(&self, nu: &[f64], cutoff: f64) -> Score {
        let s1 = self.side1(nu);
        if s1 >= cutoff {
            return Score {
                j: s1,
                side1: s1,
                side2: 0.0,
            };
        }
        self.score(nu, s1, cutoff)
    }

    fn solve(&self, search: FlatnessSearch) -> (Vec<f64>, Score) {
        let n = self.n;
        let normals = half_sphere_normals(n, normal_grid_size(n), 0x0a0a);
        let s1: Vec<f64> = normals.chunks(n).map(|v| self.side1(v)).collect();
        let mut order: Vec<usize> = (0..s1.len()).collect();
        order.sort_by(|&a, &b| s1[a].total_cmp(&s1[b]).then(a.cmp(&b)));

        // Best candidates as (J, index), kept sorted.
        let mut top: Vec<(f64, usize, Score)> = Vec::with_capacity(REFINE_CANDIDATES + 1);
        for &i in &order {
            let cutoff = if top.len() == REFINE_CANDIDATES {
                top[REFINE_CANDIDATES - 1].0
            } else {
                f64::INFINITY
            };
            if s1[i] >= cutoff {
                break;
            }
            let sc = self.score(&normals[i * n..(i + 1) * n], s1[i], cutoff);
            if sc.j < cutoff {
                top.push((sc.j, i, sc));
                top.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                top.truncate(REFINE_CANDIDATES);
            }
        }
        let mut best: Vec<(Vec<f64>, Score)> = top
            .iter()
            .map(|(_, i, s)| (normals[i * n..(i + 1) * n].to_vec(), *s))
            .collect();

        if search == FlatnessSearch::Multistart {
            let step = match n {
                2 => std::f64::consts::PI / 1024.0,
                3 => 0.04,
                _ => 0.1,
            };
            let nm = NelderMead {
                step,
                max_evals: if n == 2 { 30 } else { 40 },
                ftol: self.tol * 0.1,
                xtol: 1e-6,
            };
            let starts: Vec<(Vec<f64>, Score)> = best.clone();
            for (nu0, s0) in starts {
                let frame = complement_basis(&nu0);
                let cutoff = s0.j + 4.0 * self.tol;
                let to_normal = |v: &[f64]| -> Vec<f64> {
                    let mut u = nu0.clone();
                    for (j, e) in frame.iter().enumerate() {
                        for i in 0..n {
                            u[i] += v[j] * e[i];
                        }
                    }
                    let s = norm(&u);
                    u.iter_mut().for_each(|x| *x /= s);
                    canonical_orientation(&mut u);
                    u
                };
                let m = nm.minimize(|v| self.score_normal(&to_normal(v), cutoff).j, &vec![0.0; n - 1]);
                let nu = to_normal(&m.x);
                let sc = self.score_normal(&nu, f64::INFINITY);
                best.push((nu, sc));
            }
        }
        best.sort_by(|a, b| {
            a.1.j.total_cmp(&b.1.j).then_with(|| {
                a.0.iter()
                    .zip(&b.0)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        });
        best.swap_remove(0)
    }
}

/// Flatness of `S` near `x` at scale `r` measured against one hyperplane
/// through `x`; an upper bound for `θ_S(x, r)`.
pub fn flatness_for_normal(set: &SampledSet, x: &[f64], r: f64, normal: &[f64]) -> Result<f64> {
    check_positive("radius", r)?;
    if x.len() != set.dim() || normal.len() != set.dim() {
        return Err(FlatError::DimensionMismatch {
            expected: set.dim(),
            found: if x.len() != set.dim() { x.len() } else { normal.len() },
        });
    }
    let len = norm(normal);
    check_positive("normal length", len)?;
    let nu: Vec<f64> = normal.iter().map(|v| v / len).collect();
    let prob = FlatnessProblem::new(set, x, r)
        .ok_or(FlatError::EmptySet("no samples inside the flatness window"))?;
    Ok(prob.score_normal(&nu, f64::INFINITY).j.min(1.0))
}

/// Local flatness `θ_S(x, r)` over hyperplanes through `x`.
pub fn local_flatness(
    set: &SampledSet,
    x: &[f64],
    r: f64,
    search: FlatnessSearch,
) -> Result<FlatnessReport> {
    check_positive("radius", r)?;
    if x.len() != set.dim() {
        return Err(FlatError::DimensionMismatch {
            expected: set.dim(),
            found: x.len(),
        });
    }
    let prob = FlatnessProblem::new(set, x, r)
        .ok_or(FlatError::EmptySet("no samples inside the flatness window"))?;
    let (nu, sc) = prob.solve(search);
    let raw = sc.j;
    Ok(FlatnessReport {
        theta: raw.min(1.0),
        best_plane: Hyperplane::new(&nu, x)?,
        radius: r,
        resolution: set.resolution(),
        side_sup_set_to_plane: sc.side1 * r,
        side_sup_plane_to_set: sc.side2 * r,
        clamped: raw > 1.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Flat,
    Singular,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyVerdict {
    pub gradient_norm_at_x: f64,
    /// `(r, θ(x, r))` for each tested scale.
    pub theta_curve: Vec<(f64, f64)>,
    pub classification: Classification,
    pub delta_used: f64,
}

/// Measures `θ_{Σ_h}(x, r)` on freshly sampled windows, one per scale. The
/// sampling resolution at scale `r` is `relative_resolution * r`.
pub fn theta_curve(
    h: &Polynomial,
    x: &[f64],
    scales: &[f64],
    relative_resolution: f64,
) -> Result<Vec<(f64, f64)>> {
    theta_curve_with(h, x, scales, relative_resolution, FlatnessSearch::Multistart)
}

/// [`theta_curve`] with an explicit normal search.
pub fn theta_curve_with(
    h: &Polynomial,
    x: &[f64],
    scales: &[f64],
    relative_resolution: f64,
    search: FlatnessSearch,
) -> Result<Vec<(f64, f64)>> {
    check_positive("resolution", relative_resolution)?;
    let rmax = scales.iter().copied().fold(0.0, f64::max);
    check_positive("scale", rmax)?;
    let q = recenter_at_root(h, x, rmax)?;
    scales
        .iter()
        .map(|&r| {
            check_positive("scale", r)?;
            let set = sample_recentered(&q, x, r, relative_resolution * r)?;
            Ok((r, local_flatness(&set, x, r, search)?.theta))
        })
        .collect()
}

/// Flat/singular verdict for a root of a harmonic polynomial: flat iff some
/// tested scale has `θ < delta` (equality counts as singular).
pub fn classify_root(
    h: &Polynomial,
    x: &[f64],
    delta: f64,
    scales: &[f64],
    relative_resolution: f64,
) -> Result<DichotomyVerdict> {
    if matches!(h.degree(), Degree::Zero | Degree::Finite(0)) {
        return Err(FlatError::ConstantPolynomial);
    }
    if !h.is_harmonic(1e-10) {
        return Err(FlatError::NotHarmonic);
    }
    check_decreasing(scales)?;
    let g = h.gradient_at(x)?;
    let curve = theta_curve(h, x, scales, relative_resolution)?;
    let min = curve.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    Ok(DichotomyVerdict {
        gradient_norm_at_x: norm(&g),
        theta_curve: curve,
        classification: if min < delta {
            Classification::Flat
        } else {
            Classification::Singular
        },
        delta_used: delta,
    })
}
