//! Zero-set sampling, Hausdorff distances between point clouds, hyperplane
//! discs and blow-up sequences.
//!
//! Sampling works in unit coordinates `u = (z - center) / radius` on the
//! polynomial `q(u) = p(center + radius u)`. Three passes feed the sample:
//!
//! 1. cube subdivision of `[-1, 1]^n` down to cells of side `<= resolution`,
//!    discarding cells on which `q` provably has no root, followed by damped
//!    Newton projection from every surviving cell center;
//! 2. radial rays from the center with sign-change bracketing and bisection;
//! 3. Newton iteration on the bounding sphere from cells that straddle it,
//!    which catches components that only touch the ball.
//!
//! Points closer than a quarter of the resolution are merged.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_positive, FlatError, Result};
use crate::poly::{Degree, Evaluator, MultiIndex, Polynomial};
use crate::sampling::{complement_basis, dist2, dot, norm, sphere_points};
use crate::spatial::KdTree;

/// Relative root tolerance: `x` counts as a root of `p` at scale `r` when
/// `|p(x)| <= ROOT_TOLERANCE * scale(p, x, r)`.
pub const ROOT_TOLERANCE: f64 = 1e-8;
/// Residual accepted by the Newton passes, relative to the polynomial scale.
const NEWTON_ACCEPT: f64 = 1e-10;
const NEWTON_ITERS: usize = 50;

/// `Σ |c_α| r^{|α|}` for the coefficients of `p` recentered at `x`; the
/// natural size of `p` on `B(x, r)`.
pub fn polynomial_scale(p: &Polynomial, x: &[f64], r: f64) -> Result<f64> {
    Ok(p.recenter(x)?.l1_bound(r))
}

/// Returns `p(x + ·)` with its constant term removed after checking that
/// `|p(x)|` is within the root tolerance at scale `r`.
pub fn recenter_at_root(p: &Polynomial, x: &[f64], r: f64) -> Result<Polynomial> {
    let q = p.recenter(x)?;
    let residual = p.evaluate(x)?.abs();
    let tolerance = ROOT_TOLERANCE * q.l1_bound(r);
    if residual > tolerance {
        return Err(FlatError::NotARoot {
            residual,
            tolerance,
        });
    }
    let zero = MultiIndex::zero(p.dim());
    let terms: Vec<_> = q
        .terms()
        .filter(|(a, _)| **a != zero)
        .map(|(a, c)| (a.clone(), c))
        .collect();
    Polynomial::from_terms(p.dim(), terms)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    normal: Vec<f64>,
    base: Vec<f64>,
}

impl Hyperplane {
    /// Normalizes `normal`; fails on a zero normal or mismatched lengths.
    pub fn new(normal: &[f64], base: &[f64]) -> Result<Self> {
        if normal.len() != base.len() {
            return Err(FlatError::DimensionMismatch {
                expected: normal.len(),
                found: base.len(),
            });
        }
        let s = norm(normal);
        if !(s > 0.0) || !s.is_finite() {
            return Err(FlatError::InvalidParameter {
                what: "normal length",
                value: s,
                expected: "nonzero and finite",
            });
        }
        Ok(Hyperplane {
            normal: normal.iter().map(|v| v / s).collect(),
            base: base.to_vec(),
        })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// Signed distance `⟨z - base, normal⟩`.
    pub fn signed_distance(&self, z: &[f64]) -> f64 {
        z.iter()
            .zip(&self.base)
            .zip(&self.normal)
            .map(|((zi, bi), ni)| (zi - bi) * ni)
            .sum()
    }
}

/// Finite point cloud standing in for a closed set intersected with a ball.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampledSet {
    dim: usize,
    points: Vec<f64>,
    center: Vec<f64>,
    radius: f64,
    resolution: f64,
    /// Set when the sampler saw many roots without a sign change nearby.
    pub sign_change_warning: bool,
    /// Polynomial whose zero set was sampled, if any.
    pub generator: Option<Polynomial>,
    #[serde(skip)]
    index: OnceLock<KdTree>,
}

impl PartialEq for SampledSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.points == other.points
            && self.center == other.center
            && self.radius == other.radius
            && self.resolution == other.resolution
            && self.sign_change_warning == other.sign_change_warning
            && self.generator == other.generator
    }
}

impl SampledSet {
    /// Builds a set from a flat coordinate buffer, keeping the points that lie
    /// in the closed ball `B(center, radius)` (to `1e-9` relative).
    pub fn from_points(
        dim: usize,
        points: &[f64],
        center: &[f64],
        radius: f64,
        resolution: f64,
    ) -> Result<Self> {
        check_dim(dim)?;
        check_positive("radius", radius)?;
        check_positive("resolution", resolution)?;
        if center.len() != dim {
            return Err(FlatError::DimensionMismatch {
                expected: dim,
                found: center.len(),
            });
        }
        if points.len() % dim != 0 {
            return Err(FlatError::DimensionMismatch {
                expected: dim,
                found: points.len() % dim,
            });
        }
        let lim = (radius * (1.0 + 1e-9)).powi(2);
        let mut kept = Vec::with_capacity(points.len());
        for p in points.chunks(dim) {
            if dist2(p, center) <= lim {
                kept.extend_from_slice(p);
            }
        }
        Ok(SampledSet {
            dim,
            points: kept,
            center: center.to_vec(),
            radius,
            resolution,
            sign_change_warning: false,
            generator: None,
            index: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn coords(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.points.chunks(self.dim)
    }

    /// The points inside `B(center, radius)` as a new set with that ball as its window.
    pub fn restrict(&self, center: &[f64], radius: f64) -> Result<SampledSet> {
        let mut s = SampledSet::from_points(self.dim, &self.points, center, radius, self.resolution)?;
        s.generator = self.generator.clone();
        s.sign_change_warning = self.sign_change_warning;
        Ok(s)
    }

    /// Spatial index over the points, built on first use.
    pub fn tree(&self) -> &KdTree {
        self.index.get_or_init(|| KdTree::new(self.dim, &self.points))
    }

    /// The points as CSV text with header `x0,...,x{n-1}`.
    pub fn csv_string(&self) -> String {
        let header: Vec<String> = (0..self.dim).map(|i| format!("x{i}")).collect();
        let mut out = header.join(",");
        out.push('\n');
        for p in self.points() {
            let row: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Center, radius, resolution, count and generator as pretty JSON.
    pub fn metadata_json(&self) -> Result<String> {
        let meta = SetMetadata {
            dim: self.dim,
            center: self.center.clone(),
            radius: self.radius,
            resolution: self.resolution,
            count: self.len(),
            generator: self.generator.clone(),
        };
        Ok(serde_json::to_string_pretty(&meta)?)
    }

    /// Writes [`SampledSet::csv_string`] to `path` and
    /// [`SampledSet::metadata_json`] to the sidecar `<path>.meta.json`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.csv_string())?;
        let mut side = path.as_os_str().to_owned();
        side.push(".meta.json");
        std::fs::write(side, self.metadata_json()?)?;
        Ok(())
    }

    /// Reads a CSV written by [`SampledSet::write_csv`]. Center, radius and
    /// resolution come from the sidecar when present, otherwise from the caller.
    pub fn read_csv(path: &Path, fallback: Option<(&[f64], f64, f64)>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(FlatError::EmptySet("csv has no header"))?;
        let dim = header.split(',').count();
        let mut pts = Vec::new();
        for (ln, line) in lines.enumerate() {
            for (col, tok) in line.split(',').enumerate() {
                let v: f64 = tok.trim().parse().map_err(|_| FlatError::Parse {
                    pos: ln + 2,
                    msg: format!("bad number `{tok}` in column {col}"),
                })?;
                pts.push(v);
            }
        }
        let mut side = path.as_os_str().to_owned();
        side.push(".meta.json");
        let meta: Option<SetMetadata> = std::fs::read_to_string(&side)
            .ok()
            .map(|s| serde_json::from_str(&s))
            .transpose()?;
        let (center, radius, resolution, generator) = match (meta, fallback) {
            (Some(m), _) => (m.center, m.radius, m.resolution, m.generator),
            (None, Some((c, r, h))) => (c.to_vec(), r, h, None),
            (None, None) => {
                // Smallest ball about the centroid containing everything.
                let count = (pts.len() / dim).max(1);
                let mut c = vec![0.0; dim];
                for p in pts.chunks(dim) {
                    for i in 0..dim {
                        c[i] += p[i] / count as f64;
                    }
                }
                let r = pts.chunks(dim).map(|p| dist2(p, &c).sqrt()).fold(0.0, f64::max);
                (c, r.max(1e-12), (r * 1e-3).max(1e-12), None)
            }
        };
        let mut s = SampledSet::from_points(dim, &pts, &center, radius, resolution)?;
        s.generator = generator;
        Ok(s)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SetMetadata {
    dim: usize,
    center: Vec<f64>,
    radius: f64,
    resolution: f64,
    count: usize,
    generator: Option<Polynomial>,
}

fn ray_count(n: usize) -> usize {
    match n {
        2 => 720,
        3 => 2000,
        _ => 4000,
    }
}

/// Sample of `Σ_p ∩ B(center, radius)` with target spacing `resolution`.
pub fn sample_zero_set(
    p: &Polynomial,
    center: &[f64],
    radius: f64,
    resolution: f64,
) -> Result<SampledSet> {
    if p.is_constant() {
        return Err(FlatError::ConstantPolynomial);
    }
    check_positive("radius", radius)?;
    check_positive("resolution", resolution)?;
    if resolution > radius {
        return Err(FlatError::ResolutionTooCoarse { resolution, radius });
    }
    let q = p.recenter(center)?;
    let mut set = sample_recentered(&q, center, radius, resolution)?;
    set.generator = Some(p.clone());
    Ok(set)
}

/// Like [`sample_zero_set`] but takes `q = p(center + ·)` directly.
pub fn sample_recentered(
    q: &Polynomial,
    center: &[f64],
    radius: f64,
    resolution: f64,
) -> Result<SampledSet> {
    if q.is_constant() {
        return Err(FlatError::ConstantPolynomial);
    }
    check_positive("radius", radius)?;
    check_positive("resolution", resolution)?;
    if resolution > radius {
        return Err(FlatError::ResolutionTooCoarse { resolution, radius });
    }
    let n = q.dim();
    if center.len() != n {
        return Err(FlatError::DimensionMismatch {
            expected: n,
            found: center.len(),
        });
    }
    let unit = q.dilate(radius)?;
    let h = resolution / radius;
    let sampler = UnitSampler::new(&unit, h);
    let (mut pts, warn) = sampler.run();
    for p in pts.chunks_mut(n) {
        for i in 0..n {
            p[i] = center[i] + radius * p[i];
        }
    }
    let mut set = SampledSet::from_points(n, &pts, center, radius, resolution)?;
    set.sign_change_warning = warn;
    if warn {
        log::warn!(
            "zero set near {center:?} (radius {radius}) has roots without a nearby sign change; \
             sampling may be incomplete"
        );
    }
    Ok(set)
}

struct UnitSampler {
    n: usize,
    ev: Evaluator,
    /// Bound on the Hessian operator norm over `[-1, 1]^n`.
    hess: f64,
    scale: f64,
    h: f64,
}

impl UnitSampler {
    fn new(q: &Polynomial, h: f64) -> Self {
        let n = q.dim();
        let grad = q.gradient();
        let mut hs = 0.0;
        for g in &grad {
            for i in 0..n {
                let b = g.partial_derivative(i).expect("axis in range").l1_bound(1.0);
                hs += b * b;
            }
        }
        UnitSampler {
            n,
            ev: Evaluator::new(q),
            hess: hs.sqrt(),
            scale: q.l1_bound(1.0),
            h,
        }
    }

    fn accept(&self) -> f64 {
        NEWTON_ACCEPT * self.scale
    }

    fn run(&self) -> (Vec<f64>, bool) {
        let n = self.n;
        let mut raw: Vec<f64> = Vec::new();
        let leaves = self.leaves();
        let mut g = vec![0.0; n];
        let rho = leaves.1 * (n as f64).sqrt();
        for c in leaves.0.chunks(n) {
            if let Some(z) = self.newton(c, 2.0 * rho, &mut g) {
                if dist2(&z, c).sqrt() <= 2.0 * rho && dot(&z, &z) <= 1.0 {
                    raw.extend_from_slice(&z);
                }
            }
            let cn = norm(c);
            if cn > 0.0 && (cn - 1.0).abs() <= rho {
                let s: Vec<f64> = c.iter().map(|v| v / cn).collect();
                if let Some(z) = self.sphere_newton(&s, &mut g) {
                    if dist2(&z, &s).sqrt() <= 4.0 * rho {
                        raw.extend_from_slice(&z);
                    }
                }
            }
        }
        self.rays(&mut raw);
        let origin = vec![0.0; n];
        if self.ev.value(&origin).abs() <= self.accept() {
            raw.extend_from_slice(&origin);
        }
        let pts = merge(n, raw, self.h / 2.0);
        let warn = self.sign_change_warning(&pts);
        (pts, warn)
    }

    /// Centers of the subdivision leaves that may contain a root, and the leaf half-side.
    fn leaves(&self) -> (Vec<f64>, f64) {
        let n = self.n;
        let sqrt_n = (n as f64).sqrt();
        let mut out = Vec::new();
        let mut g = vec![0.0; n];
        // (center, half-side); depth-first with children in a fixed order.
        let mut stack: Vec<(Vec<f64>, f64)> = vec![(vec![0.0; n], 1.0)];
        let mut leaf_half = 1.0;
        while leaf_half * 2.0 > self.h {
            leaf_half /= 2.0;
        }
        while let Some((c, a)) = stack.pop() {
            let rho = a * sqrt_n;
            // Skip cells outside the unit ball.
            let near: f64 = c
                .iter()
                .map(|&ci| (ci.abs() - a).max(0.0).powi(2))
                .sum::<f64>()
                .sqrt();
            if near > 1.0 {
                continue;
            }
            let v = self.ev.value_and_gradient(&c, &mut g);
            if v.abs() > norm(&g) * rho + 0.5 * self.hess * rho * rho {
                continue;
            }
            if a <= leaf_half {
                out.extend_from_slice(&c);
                continue;
            }
            let b = a / 2.0;
            for mask in (0..1usize << n).rev() {
                let child: Vec<f64> = (0..n)
                    .map(|i| c[i] + if mask >> i & 1 == 1 { b } else { -b })
                    .collect();
                stack.push((child, b));
            }
        }
        (out, leaf_half)
    }

    /// Damped Newton along the gradient from `x0` with steps capped at `cap`.
    fn newton(&self, x0: &[f64], cap: f64, g: &mut [f64]) -> Option<Vec<f64>> {
        let mut x = x0.to_vec();
        let tol = self.accept();
        for _ in 0..NEWTON_ITERS {
            let v = self.ev.value_and_gradient(&x, g);
            if v.abs() <= tol {
                return Some(x);
            }
            let gg = dot(g, g);
            if gg == 0.0 || !gg.is_finite() {
                return None;
            }
            let mut step: Vec<f64> = g.iter().map(|gi| -v * gi / gg).collect();
            let len = norm(&step);
            if len > cap {
                step.iter_mut().for_each(|s| *s *= cap / len);
            }
            // Backtrack until |q| decreases.
            let mut t = 1.0;
            loop {
                let y: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + t * b).collect();
                let vy = self.ev.value(&y);
                if vy.abs() < v.abs() || t < 1e-4 {
                    x = y;
                    break;
                }
                t *= 0.5;
            }
        }
        (self.ev.value(&x).abs() <= tol).then_some(x)
    }

    /// Newton iteration for roots of `q` restricted to the unit sphere.
    fn sphere_newton(&self, x0: &[f64], g: &mut [f64]) -> Option<Vec<f64>> {
        let mut x = x0.to_vec();
        let tol = self.accept();
        for _ in 0..NEWTON_ITERS {
            let v = self.ev.value_and_gradient(&x, g);
            if v.abs() <= tol {
                return Some(x);
            }
            let radial = dot(g, &x);
            let t: Vec<f64> = g.iter().zip(&x).map(|(gi, xi)| gi - radial * xi).collect();
            let tt = dot(&t, &t);
            if tt == 0.0 || !tt.is_finite() {
                return None;
            }
            let mut step: Vec<f64> = t.iter().map(|ti| -v * ti / tt).collect();
            let len = norm(&step);
            if len > 0.25 {
                step.iter_mut().for_each(|s| *s *= 0.25 / len);
            }
            let mut s = 1.0;
            loop {
                let y: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + s * b).collect();
                let ny = norm(&y);
                let y: Vec<f64> = y.iter().map(|v| v / ny).collect();
                let vy = self.ev.value(&y);
                if vy.abs() < v.abs() || s < 1e-4 {
                    x = y;
                    break;
                }
                s *= 0.5;
            }
        }
        (self.ev.value(&x).abs() <= tol).then_some(x)
    }

    fn rays(&self, out: &mut Vec<f64>) {
        let n = self.n;
        let dirs = sphere_points(n, ray_count(n), 0x7a75);
        let steps = (1.0 / self.h).ceil() as usize;
        let dt = 1.0 / steps as f64;
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        for d in dirs.chunks(n) {
            let at = |t: f64, buf: &mut Vec<f64>| {
                for i in 0..n {
                    buf[i] = t * d[i];
                }
            };
            at(0.0, &mut a);
            let mut fa = self.ev.value(&a);
            for s in 1..=steps {
                let tb = s as f64 * dt;
                at(tb, &mut b);
                let fb = self.ev.value(&b);
                if fa != 0.0 && fb != 0.0 && (fa < 0.0) != (fb < 0.0) {
                    let (mut lo, mut hi, mut flo) = (tb - dt, tb, fa);
                    while hi - lo > 1e-12 {
                        let mid = 0.5 * (lo + hi);
                        at(mid, &mut a);
                        let fm = self.ev.value(&a);
                        if fm == 0.0 {
                            lo = mid;
                            hi = mid;
                            break;
                        }
                        if (fm < 0.0) == (flo < 0.0) {
                            lo = mid;
                            flo = fm;
                        } else {
                            hi = mid;
                        }
                    }
                    at(0.5 * (lo + hi), &mut a);
                    out.extend_from_slice(&a);
                } else if fb == 0.0 {
                    out.extend_from_slice(&b);
                }
                fa = fb;
            }
        }
    }

    /// True when more than 10% of the roots show no sign change across
    /// `±h/4` along the gradient.
    fn sign_change_warning(&self, pts: &[f64]) -> bool {
        let n = self.n;
        let count = pts.len() / n;
        if count == 0 {
            return false;
        }
        let mut g = vec![0.0; n];
        let mut bad = 0;
        let e = self.h / 4.0;
        for p in pts.chunks(n) {
            self.ev.value_and_gradient(p, &mut g);
            let gn = norm(&g);
            if gn == 0.0 {
                bad += 1;
                continue;
            }
            let plus: Vec<f64> = p.iter().zip(&g).map(|(a, b)| a + e * b / gn).collect();
            let minus: Vec<f64> = p.iter().zip(&g).map(|(a, b)| a - e * b / gn).collect();
            if self.ev.value(&plus) * self.ev.value(&minus) >= 0.0 {
                bad += 1;
            }
        }
        bad * 10 > count
    }
}

/// Lexicographically sorted points with near-duplicates (closer than `eps`) removed.
fn merge(n: usize, raw: Vec<f64>, eps: f64) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..raw.len() / n).collect();
    let pt = |i: usize| &raw[i * n..(i + 1) * n];
    idx.sort_by(|&a, &b| {
        pt(a)
            .iter()
            .zip(pt(b))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut kept: Vec<f64> = Vec::new();
    let eps2 = eps * eps;
    let cell = |p: &[f64]| -> Vec<i64> { p.iter().map(|v| (v / eps).floor() as i64).collect() };
    for i in idx {
        let p = pt(i);
        let key = cell(p);
        let mut dup = false;
        // Scan the 3^n neighbouring cells.
        let mut off = vec![-1i64; n];
        'outer: loop {
            let k: Vec<i64> = key.iter().zip(&off).map(|(a, b)| a + b).collect();
            if let Some(list) = grid.get(&k) {
                for &j in list {
                    if dist2(&kept[j * n..(j + 1) * n], p) < eps2 {
                        dup = true;
                        break 'outer;
                    }
                }
            }
            let mut d = 0;
            loop {
                if d == n {
                    break 'outer;
                }
                if off[d] < 1 {
                    off[d] += 1;
                    break;
                }
                off[d] = -1;
                d += 1;
            }
        }
        if !dup {
            let j = kept.len() / n;
            kept.extend_from_slice(p);
            grid.entry(key).or_default().push(j);
        }
    }
    kept
}

/// Directed distance `sup_{a ∈ A} dist(a, B)`.
pub fn directed_distance(a: &SampledSet, b_tree: &KdTree) -> f64 {
    a.points().map(|p| b_tree.distance(p)).fold(0.0, f64::max)
}

/// Hausdorff distance between two finite samples.
pub fn hausdorff_distance(a: &SampledSet, b: &SampledSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(FlatError::EmptySet("hausdorff distance needs nonempty sets"));
    }
    if a.dim != b.dim {
        return Err(FlatError::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    let ta = a.tree();
    let tb = b.tree();
    Ok(directed_distance(a, &tb).max(directed_distance(b, &ta)))
}

/// Quasi-uniform samples of `(base' + L) ∩ B(center, radius)` where `base'`
/// is the projection of `center` onto `plane` and `L` its direction space.
pub fn hyperplane_disc(
    plane: &Hyperplane,
    center: &[f64],
    radius: f64,
    resolution: f64,
) -> Result<SampledSet> {
    check_positive("radius", radius)?;
    check_positive("resolution", resolution)?;
    let n = plane.dim();
    check_dim(n)?;
    if center.len() != n {
        return Err(FlatError::DimensionMismatch {
            expected: n,
            found: center.len(),
        });
    }
    let off = plane.signed_distance(center);
    if off.abs() > radius {
        return Err(FlatError::NoIntersection {
            distance: off.abs(),
            radius,
        });
    }
    let foot: Vec<f64> = center
        .iter()
        .zip(plane.normal())
        .map(|(c, v)| c - off * v)
        .collect();
    let rho = (radius * radius - off * off).max(0.0).sqrt();
    let basis = complement_basis(plane.normal());
    let m = n - 1;
    let mut pts = Vec::new();
    let push = |t: &[f64], pts: &mut Vec<f64>| {
        for i in 0..n {
            let mut v = foot[i];
            for (j, e) in basis.iter().enumerate() {
                v += t[j] * e[i];
            }
            pts.push(v);
        }
    };
    if rho == 0.0 {
        push(&vec![0.0; m], &mut pts);
    } else {
        // Cubic lattice of spacing `resolution` clipped to the disc, plus the rim.
        let k = (rho / resolution).ceil() as i64;
        let step = rho / k as f64;
        let mut idx = vec![-k; m];
        loop {
            let t: Vec<f64> = idx.iter().map(|&i| i as f64 * step).collect();
            if dot(&t, &t) <= rho * rho * (1.0 + 1e-12) {
                push(&t, &mut pts);
            }
            let mut d = 0;
            while d < m && idx[d] == k {
                idx[d] = -k;
                d += 1;
            }
            if d == m {
                break;
            }
            idx[d] += 1;
        }
        if m >= 2 {
            let rim_count = rim_count(m, rho, resolution);
            let rim = sphere_points(m, rim_count, 17);
            for r in rim.chunks(m) {
                let t: Vec<f64> = r.iter().map(|v| v * rho).collect();
                push(&t, &mut pts);
            }
        }
    }
    let mut set = SampledSet::from_points(n, &pts, center, radius * (1.0 + 1e-12), resolution)?;
    set.radius = radius;
    Ok(set)
}

fn rim_count(m: usize, rho: f64, h: f64) -> usize {
    let circ = 2.0 * std::f64::consts::PI * rho / h;
    match m {
        2 => circ.ceil() as usize,
        _ => (circ.powi(m as i32 - 1) * 0.5).ceil().min(2e6) as usize,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupFrame {
    pub scale: f64,
    /// Sample of `(Σ - x) / scale ∩ B(0, window)`.
    pub set: SampledSet,
    pub hd_to_limit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupSequence {
    /// Degree of the lowest nonvanishing homogeneous part.
    pub limit_degree: u32,
    pub limit_polynomial: Polynomial,
    pub limit: SampledSet,
    pub frames: Vec<BlowupFrame>,
}

pub fn check_decreasing(scales: &[f64]) -> Result<()> {
    if scales.is_empty()
        || scales.iter().any(|s| !(*s > 0.0) || !s.is_finite())
        || scales.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(FlatError::ScalesNotDecreasing);
    }
    Ok(())
}

/// Rescalings `(Σ_p - x) / r_i ∩ B(0, window)` compared against the zero set
/// of the lowest nonvanishing homogeneous part of `p` at `x`.
pub fn blowup_sequence(
    p: &Polynomial,
    x: &[f64],
    scales: &[f64],
    window: f64,
    resolution: f64,
) -> Result<BlowupSequence> {
    check_decreasing(scales)?;
    check_positive("window", window)?;
    let q = recenter_at_root(p, x, scales[0] * window)?;
    let deg = match q.degree() {
        Degree::Zero => return Err(FlatError::NoNonvanishingPart),
        Degree::Finite(d) => d,
    };
    let j = (1..=deg)
        .find(|&k| !q.graded_component(k).is_zero())
        .ok_or(FlatError::NoNonvanishingPart)?;
    let lowest = q.graded_component(j);
    let origin = vec![0.0; p.dim()];
    let limit = sample_zero_set(&lowest, &origin, window, resolution)?;
    let limit_tree = limit.tree();
    let mut frames = Vec::with_capacity(scales.len());
    for &r in scales {
        let qi = q.dilate(r)?;
        let set = sample_recentered(&qi, &origin, window, resolution)?;
        let hd = if set.is_empty() || limit.is_empty() {
            f64::INFINITY
        } else {
            directed_distance(&set, &limit_tree).max(directed_distance(&limit, set.tree()))
        };
        frames.push(BlowupFrame {
            scale: r,
            set,
            hd_to_limit: hd,
        });
    }
    Ok(BlowupSequence {
        limit_degree: j,
        limit_polynomial: lowest,
        limit,
        frames,
    })
}

/// Fixtures contrasting convergence of coefficients with convergence of zero sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConvergenceFixture {
    /// `h_i = xy + y/i` on `B((1, 1/2), 1)`, whose limit set touches the ball
    /// at the isolated point `(0, 1/2)`.
    TangentBall,
    /// The same sequence on `B(0, 1)`, where the limit set crosses the ball
    /// transversally.
    GenericInterior,
}

impl std::str::FromStr for ConvergenceFixture {
    type Err = FlatError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tangent_ball" => Ok(ConvergenceFixture::TangentBall),
            "generic_interior" => Ok(ConvergenceFixture::GenericInterior),
            other => Err(FlatError::UnknownFixture(other.to_string())),
        }
    }
}

impl ConvergenceFixture {
    pub fn ball(self) -> (Vec<f64>, f64) {
        match self {
            ConvergenceFixture::TangentBall => (vec![1.0, 0.5], 1.0),
            ConvergenceFixture::GenericInterior => (vec![0.0, 0.0], 1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ConvergenceFixture::TangentBall => "tangent_ball",
            ConvergenceFixture::GenericInterior => "generic_interior",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub fixture: String,
    pub index: u32,
    pub coefficient_distance: f64,
    pub hausdorff: f64,
    pub resolution: f64,
}

/// Compares `Σ_{h_i} ∩ B` with `Σ_h ∩ B` for `h = xy`, `h_i = xy + y/i`.
pub fn verify_coefficient_vs_set_convergence(
    fixture: ConvergenceFixture,
    i: u32,
    resolution: f64,
) -> Result<ConvergenceReport> {
    if i == 0 {
        return Err(FlatError::OutOfRange {
            what: "sequence index",
            value: 0,
            range: ">= 1",
        });
    }
    let h: Polynomial = "x0*x1".parse()?;
    let hi = &h + &Polynomial::variable(2, 1).scaled(1.0 / i as f64);
    let (c, r) = fixture.ball();
    let a = sample_zero_set(&hi, &c, r, resolution)?;
    let b = sample_zero_set(&h, &c, r, resolution)?;
    Ok(ConvergenceReport {
        fixture: fixture.name().to_string(),
        index: i,
        coefficient_distance: hi.coefficient_distance(&h),
        hausdorff: hausdorff_distance(&a, &b)?,
        resolution,
    })
}
