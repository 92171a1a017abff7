//! Multivariate real polynomials stored as a multi-index -> coefficient table.
//!
//! Coefficients are `f64`. Transforms that mix coefficients (recentering,
//! dilation, differentiation) drop terms whose magnitude falls below
//! [`PRUNE_RELATIVE`] times the largest remaining coefficient so that the
//! degree of a result is not inflated by roundoff.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_positive, FlatError, Result};
use crate::{MAX_DEGREE, MAX_DIM};

/// Relative threshold below which coefficients are dropped after a transform.
pub const PRUNE_RELATIVE: f64 = 1e-14;

/// Exponent vector `α` of a monomial `x^α`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut e = vec![0; dim];
        e[axis] = 1;
        MultiIndex(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `α! = α_1! ... α_n!`
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| factorial(a)).product()
    }

    /// Monomial value `x^α`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&a, &xi)| xi.powi(a as i32))
            .product()
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Binomial coefficient, exact in `f64` for `n <= 20`.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc as f64
}

/// Every multi-index of length `dim` and total degree `degree`, in
/// lexicographically decreasing order.
pub fn multi_indices(dim: usize, degree: u32) -> Vec<MultiIndex> {
    fn rec(dim: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if prefix.len() + 1 == dim {
            prefix.push(left);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for a in (0..=left).rev() {
            prefix.push(a);
            rec(dim, left - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, degree, &mut Vec::with_capacity(dim), &mut out);
    out
}

/// Degree of a polynomial; the zero polynomial carries a distinguished flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degree {
    Zero,
    Finite(u32),
}

impl Degree {
    pub fn value(self) -> Option<u32> {
        match self {
            Degree::Zero => None,
            Degree::Finite(d) => Some(d),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    /// # Panics
    /// If `dim` is outside `2..=5`.
    pub fn zero(dim: usize) -> Self {
        assert!(check_dim(dim).is_ok(), "unsupported dimension {dim}");
        Polynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        if c != 0.0 {
            p.terms.insert(MultiIndex::zero(dim), c);
        }
        p
    }

    /// The coordinate function `x_axis`.
    pub fn variable(dim: usize, axis: usize) -> Self {
        assert!(axis < dim, "axis {axis} out of range for dimension {dim}");
        let mut p = Self::zero(dim);
        p.terms.insert(MultiIndex::unit(dim, axis), 1.0);
        p
    }

    pub fn monomial(coef: f64, exponents: &[u32]) -> Result<Self> {
        Self::from_terms(exponents.len(), [(MultiIndex::new(exponents.to_vec()), coef)])
    }

    /// Collects terms, summing repeated multi-indices and dropping exact zeros.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        check_dim(dim)?;
        let mut map: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (alpha, c) in terms {
            if alpha.dim() != dim {
                return Err(FlatError::DimensionMismatch {
                    expected: dim,
                    found: alpha.dim(),
                });
            }
            if alpha.degree() > MAX_DEGREE {
                return Err(FlatError::OutOfRange {
                    what: "degree",
                    value: alpha.degree() as i64,
                    range: "0..=20",
                });
            }
            *map.entry(alpha).or_insert(0.0) += c;
        }
        map.retain(|_, c| *c != 0.0);
        Ok(Polynomial { dim, terms: map })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> Degree {
        self.terms
            .keys()
            .map(MultiIndex::degree)
            .max()
            .map_or(Degree::Zero, Degree::Finite)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|a| a.degree() == 0)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> + '_ {
        self.terms.iter().map(|(a, &c)| (a, c))
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `Σ |c_α| R^{|α|}`, an upper bound for `|p|` on the cube `[-R, R]^n`.
    pub fn l1_bound(&self, radius: f64) -> f64 {
        self.terms
            .iter()
            .map(|(a, c)| c.abs() * radius.powi(a.degree() as i32))
            .sum()
    }

    /// Largest coefficient difference `max_α |p_α - q_α|`.
    pub fn coefficient_distance(&self, other: &Polynomial) -> f64 {
        let diff = self - other;
        diff.max_abs_coefficient()
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(MultiIndex::degree);
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            Err(FlatError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            })
        } else {
            Ok(())
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.eval(x))
    }

    /// Unchecked evaluation; `x` must have length `dim`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.terms.iter().map(|(a, c)| c * a.monomial(x)).sum()
    }

    pub fn partial_derivative(&self, axis: usize) -> Result<Polynomial> {
        if axis >= self.dim {
            return Err(FlatError::AxisOutOfRange {
                axis,
                dim: self.dim,
            });
        }
        let terms = self.terms.iter().filter_map(|(a, &c)| {
            let e = a.0[axis];
            (e > 0).then(|| {
                let mut b = a.0.clone();
                b[axis] -= 1;
                (MultiIndex(b), c * e as f64)
            })
        });
        Ok(Polynomial {
            dim: self.dim,
            terms: terms.collect(),
        })
    }

    pub fn gradient(&self) -> Vec<Polynomial> {
        (0..self.dim)
            .map(|i| self.partial_derivative(i).expect("axis in range"))
            .collect()
    }

    pub fn gradient_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let mut g = vec![0.0; self.dim];
        Evaluator::new(self).value_and_gradient(x, &mut g);
        Ok(g)
    }

    pub fn laplacian(&self) -> Polynomial {
        let mut out: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (a, &c) in &self.terms {
            for i in 0..self.dim {
                let e = a.0[i];
                if e >= 2 {
                    let mut b = a.0.clone();
                    b[i] -= 2;
                    *out.entry(MultiIndex(b)).or_insert(0.0) += c * (e * (e - 1)) as f64;
                }
            }
        }
        let mut p = Polynomial {
            dim: self.dim,
            terms: out,
        };
        p.terms.retain(|_, c| *c != 0.0);
        p
    }

    /// True iff every coefficient of the Laplacian is at most
    /// `tol * max |coefficient of p|` in magnitude.
    pub fn is_harmonic(&self, tol: f64) -> bool {
        let scale = self.max_abs_coefficient();
        self.laplacian()
            .terms
            .values()
            .all(|c| c.abs() <= tol * scale)
    }

    /// Coefficient table of `y -> p(y + z)`.
    pub fn recenter(&self, z: &[f64]) -> Result<Polynomial> {
        self.check_point(z)?;
        if z.iter().all(|&zi| zi == 0.0) {
            return Ok(self.clone());
        }
        let n = self.dim;
        // Powers z_i^e for e up to the degree.
        let max_e = self.terms.keys().flat_map(|a| a.0.iter()).copied().max().unwrap_or(0) as usize;
        let pow: Vec<Vec<f64>> = z
            .iter()
            .map(|&zi| {
                let mut v = vec![1.0; max_e + 1];
                for e in 1..=max_e {
                    v[e] = v[e - 1] * zi;
                }
                v
            })
            .collect();

        // Neumaier-compensated accumulation per output multi-index.
        let mut acc: BTreeMap<MultiIndex, (f64, f64)> = BTreeMap::new();
        let mut beta = vec![0u32; n];
        for (alpha, &c) in &self.terms {
            let a = &alpha.0;
            beta.iter_mut().for_each(|b| *b = 0);
            loop {
                let mut w = c;
                for i in 0..n {
                    w *= binomial(a[i], beta[i]) * pow[i][(a[i] - beta[i]) as usize];
                }
                if w != 0.0 {
                    let slot = acc.entry(MultiIndex(beta.clone())).or_insert((0.0, 0.0));
                    neumaier_add(slot, w);
                }
                // Odometer over beta <= alpha.
                let mut i = 0;
                loop {
                    if i == n {
                        break;
                    }
                    if beta[i] < a[i] {
                        beta[i] += 1;
                        break;
                    }
                    beta[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
            }
        }
        let mut p = Polynomial {
            dim: n,
            terms: acc.into_iter().map(|(k, (s, comp))| (k, s + comp)).collect(),
        };
        p.prune(PRUNE_RELATIVE);
        Ok(p)
    }

    /// Coefficient table of `y -> p(t y)`.
    pub fn dilate(&self, t: f64) -> Result<Polynomial> {
        check_positive("dilation factor", t)?;
        let mut p = Polynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(a, &c)| (a.clone(), c * t.powi(a.degree() as i32)))
                .collect(),
        };
        p.prune(PRUNE_RELATIVE);
        Ok(p)
    }

    /// Terms of total degree exactly `k` (no recentering).
    pub fn graded_component(&self, k: u32) -> Polynomial {
        Polynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(a, _)| a.degree() == k)
                .map(|(a, &c)| (a.clone(), c))
                .collect(),
        }
    }

    /// The homogeneous part `p_k^{(center)}`: degree-`k` Taylor terms of `p` about `center`.
    pub fn homogeneous_part(&self, center: &[f64], k: u32) -> Result<Polynomial> {
        Ok(self.recenter(center)?.graded_component(k))
    }

    pub fn decompose(&self, center: &[f64]) -> Result<Decomposition> {
        if self.is_zero() {
            return Err(FlatError::ZeroPolynomial);
        }
        let q = self.recenter(center)?;
        let d = match self.degree() {
            Degree::Finite(d) => d,
            Degree::Zero => unreachable!(),
        };
        Ok(Decomposition {
            center: center.to_vec(),
            parts: (0..=d).map(|k| q.graded_component(k)).collect(),
        })
    }

    /// Drops coefficients below `rel * max |c|`.
    pub fn prune(&mut self, rel: f64) {
        let cut = rel * self.max_abs_coefficient();
        self.terms.retain(|_, c| c.abs() >= cut && *c != 0.0);
    }

    pub fn scaled(&self, c: f64) -> Polynomial {
        let mut p = Polynomial {
            dim: self.dim,
            terms: self.terms.iter().map(|(a, &v)| (a.clone(), v * c)).collect(),
        };
        p.terms.retain(|_, v| *v != 0.0);
        p
    }

    pub fn mul_poly(&self, other: &Polynomial) -> Result<Polynomial> {
        if self.dim != other.dim {
            return Err(FlatError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, &c) in &self.terms {
            for (b, &e) in &other.terms {
                let s: Vec<u32> = a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect();
                terms.push((MultiIndex(s), c * e));
            }
        }
        Polynomial::from_terms(self.dim, terms)
    }

    /// Coefficients in the given monomial order (missing terms are zero).
    pub fn coefficients_in(&self, basis: &[MultiIndex]) -> Vec<f64> {
        basis.iter().map(|a| self.coefficient(a)).collect()
    }

    pub fn to_record(&self) -> PolynomialRecord {
        PolynomialRecord {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(a, &c)| TermRecord {
                    exp: a.0.clone(),
                    coef: c,
                })
                .collect(),
        }
    }

    pub fn from_record(rec: PolynomialRecord) -> Result<Self> {
        Self::from_terms(
            rec.dim,
            rec.terms.into_iter().map(|t| (MultiIndex(t.exp), t.coef)),
        )
    }
}

fn neumaier_add(slot: &mut (f64, f64), x: f64) {
    let (s, c) = *slot;
    let t = s + x;
    let comp = if s.abs() >= x.abs() {
        (s - t) + x
    } else {
        (x - t) + s
    };
    *slot = (t, c + comp);
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let mut terms = self.terms.clone();
        for (a, &c) in &rhs.terms {
            *terms.entry(a.clone()).or_insert(0.0) += c;
        }
        terms.retain(|_, c| *c != 0.0);
        Polynomial {
            dim: self.dim,
            terms,
        }
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: f64) -> Polynomial {
        self.scaled(rhs)
    }
}

/// Homogeneous decomposition `p(z) = Σ_k p_k(z - center)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub center: Vec<f64>,
    /// `parts[k]` is homogeneous of degree `k`; vanished parts are zero polynomials.
    pub parts: Vec<Polynomial>,
}

impl Decomposition {
    pub fn part(&self, k: usize) -> Option<&Polynomial> {
        self.parts.get(k)
    }

    pub fn nonzero_parts(&self) -> impl Iterator<Item = (u32, &Polynomial)> + '_ {
        self.parts
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(k, p)| (k as u32, p))
    }

    /// Lowest degree `>= min_degree` with a nonvanishing part.
    pub fn lowest_nonvanishing(&self, min_degree: u32) -> Option<u32> {
        self.nonzero_parts()
            .map(|(k, _)| k)
            .find(|&k| k >= min_degree)
    }

    pub fn reassemble(&self, z: &[f64]) -> f64 {
        let y: Vec<f64> = z.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        self.parts.iter().map(|p| p.eval(&y)).sum()
    }
}

/// Flattened coefficient table for repeated evaluation.
#[derive(Clone, Debug)]
pub struct Evaluator {
    dim: usize,
    max_exp: usize,
    exps: Vec<u8>,
    coefs: Vec<f64>,
}

impl Evaluator {
    pub fn new(p: &Polynomial) -> Self {
        let dim = p.dim;
        let mut exps = Vec::with_capacity(p.terms.len() * dim);
        let mut coefs = Vec::with_capacity(p.terms.len());
        let mut max_exp = 0;
        for (a, &c) in &p.terms {
            for &e in &a.0 {
                exps.push(e as u8);
                max_exp = max_exp.max(e as usize);
            }
            coefs.push(c);
        }
        Evaluator {
            dim,
            max_exp,
            exps,
            coefs,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn powers(&self, x: &[f64]) -> [[f64; MAX_DEGREE as usize + 1]; MAX_DIM] {
        let mut pow = [[1.0; MAX_DEGREE as usize + 1]; MAX_DIM];
        for i in 0..self.dim {
            for e in 1..=self.max_exp {
                pow[i][e] = pow[i][e - 1] * x[i];
            }
        }
        pow
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        let pow = self.powers(x);
        let n = self.dim;
        let mut s = 0.0;
        for (t, &c) in self.coefs.iter().enumerate() {
            let e = &self.exps[t * n..t * n + n];
            let mut m = c;
            for i in 0..n {
                m *= pow[i][e[i] as usize];
            }
            s += m;
        }
        s
    }

    /// Returns `p(x)` and writes `∇p(x)` into `grad`.
    #[inline]
    pub fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let pow = self.powers(x);
        let n = self.dim;
        grad[..n].iter_mut().for_each(|g| *g = 0.0);
        let mut s = 0.0;
        for (t, &c) in self.coefs.iter().enumerate() {
            let e = &self.exps[t * n..t * n + n];
            let mut m = c;
            for i in 0..n {
                m *= pow[i][e[i] as usize];
            }
            s += m;
            for i in 0..n {
                let ei = e[i] as usize;
                if ei == 0 {
                    continue;
                }
                let mut d = c * ei as f64 * pow[i][ei - 1];
                for j in 0..n {
                    if j != i {
                        d *= pow[j][e[j] as usize];
                    }
                }
                grad[i] += d;
            }
        }
        s
    }
}

/// Polynomial with independent standard-normal coefficients on every
/// monomial of degree `<= degree`, the top-degree part forced nonzero.
pub fn random_polynomial<R: Rng>(dim: usize, degree: u32, rng: &mut R) -> Result<Polynomial> {
    check_dim(dim)?;
    let mut terms = Vec::new();
    for k in 0..=degree {
        for a in multi_indices(dim, k) {
            let c: f64 = rng.sample(StandardNormal);
            terms.push((a, c));
        }
    }
    let p = Polynomial::from_terms(dim, terms)?;
    if p.degree() != Degree::Finite(degree) {
        // Measure-zero event; retry with fresh draws.
        return random_polynomial(dim, degree, rng);
    }
    Ok(p)
}

// ---------------------------------------------------------------------------
// Text grammar: `c * x0^a0 * x1^a1 ...` terms joined by `+`/`-`, with `*`
// optional and `^1` omissible.

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num(f64),
    Var(usize),
    Plus,
    Minus,
    Star,
    Caret,
}

fn lex(s: &str) -> Result<Vec<(usize, Tok)>> {
    let b = s.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                out.push((i, Tok::Plus));
                i += 1
            }
            b'-' => {
                out.push((i, Tok::Minus));
                i += 1
            }
            b'*' => {
                out.push((i, Tok::Star));
                i += 1
            }
            b'^' => {
                out.push((i, Tok::Caret));
                i += 1
            }
            b'x' | b'X' => {
                let start = i;
                i += 1;
                let ds = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                if ds == i {
                    return Err(FlatError::Parse {
                        pos: start,
                        msg: "expected variable index after `x`".into(),
                    });
                }
                let idx: usize = s[ds..i].parse().map_err(|_| FlatError::Parse {
                    pos: ds,
                    msg: "variable index too large".into(),
                })?;
                out.push((start, Tok::Var(idx)));
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                    i += 1;
                }
                if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                    let save = i;
                    i += 1;
                    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
                        i += 1;
                    }
                    let ds = i;
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                    if ds == i {
                        i = save;
                    }
                }
                let v: f64 = s[start..i].parse().map_err(|_| FlatError::Parse {
                    pos: start,
                    msg: format!("malformed number `{}`", &s[start..i]),
                })?;
                out.push((start, Tok::Num(v)));
            }
            _ => {
                return Err(FlatError::Parse {
                    pos: i,
                    msg: format!("unexpected character `{}`", s[i..].chars().next().unwrap()),
                })
            }
        }
    }
    Ok(out)
}

/// Parses the text grammar. With `dim = None` the dimension is one more than
/// the largest variable index, and at least 2.
pub fn parse_polynomial(text: &str, dim: Option<usize>) -> Result<Polynomial> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(FlatError::Parse {
            pos: 0,
            msg: "empty polynomial".into(),
        });
    }
    let mut raw_terms: Vec<(f64, Vec<(usize, u32)>)> = Vec::new();
    let mut i = 0;
    let end = text.len();
    let pos_of = |i: usize| toks.get(i).map_or(end, |t| t.0);

    while i < toks.len() {
        let mut sign = 1.0;
        // Leading sign (required between terms, optional for the first one).
        match toks[i].1 {
            Tok::Plus => i += 1,
            Tok::Minus => {
                sign = -1.0;
                i += 1
            }
            _ if raw_terms.is_empty() => {}
            _ => {
                return Err(FlatError::Parse {
                    pos: pos_of(i),
                    msg: "expected `+` or `-` between terms".into(),
                })
            }
        }
        let mut coef = sign;
        let mut vars = Vec::new();
        let mut nfactors = 0;
        loop {
            match toks.get(i).map(|t| t.1) {
                Some(Tok::Num(v)) => {
                    coef *= v;
                    i += 1;
                }
                Some(Tok::Var(k)) => {
                    i += 1;
                    let mut e = 1u32;
                    if let Some(Tok::Caret) = toks.get(i).map(|t| t.1) {
                        i += 1;
                        match toks.get(i).map(|t| t.1) {
                            Some(Tok::Num(v)) if v >= 0.0 && v.fract() == 0.0 && v <= MAX_DEGREE as f64 => {
                                e = v as u32;
                                i += 1;
                            }
                            _ => {
                                return Err(FlatError::Parse {
                                    pos: pos_of(i),
                                    msg: "expected a non-negative integer exponent after `^`".into(),
                                })
                            }
                        }
                    }
                    vars.push((k, e));
                }
                _ => {
                    return Err(FlatError::Parse {
                        pos: pos_of(i),
                        msg: "expected a number or a variable".into(),
                    })
                }
            }
            nfactors += 1;
            match toks.get(i).map(|t| t.1) {
                Some(Tok::Star) => {
                    i += 1;
                    continue;
                }
                Some(Tok::Num(_)) | Some(Tok::Var(_)) => continue,
                _ => break,
            }
        }
        debug_assert!(nfactors > 0);
        raw_terms.push((coef, vars));
    }

    let max_var = raw_terms
        .iter()
        .flat_map(|(_, v)| v.iter().map(|(k, _)| *k))
        .max();
    let dim = match dim {
        Some(d) => {
            if let Some(m) = max_var {
                if m >= d {
                    return Err(FlatError::Parse {
                        pos: 0,
                        msg: format!("variable x{m} exceeds dimension {d}"),
                    });
                }
            }
            d
        }
        None => max_var.map_or(2, |m| (m + 1).max(2)),
    };
    check_dim(dim)?;
    let terms = raw_terms.into_iter().map(|(c, vars)| {
        let mut e = vec![0u32; dim];
        for (k, a) in vars {
            e[k] += a;
        }
        (MultiIndex(e), c)
    });
    Polynomial::from_terms(dim, terms)
}

impl std::str::FromStr for Polynomial {
    type Err = FlatError;
    fn from_str(s: &str) -> Result<Self> {
        parse_polynomial(s, None)
    }
}

fn fmt_coef(c: f64) -> String {
    let a = c.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{c}")
    } else {
        format!("{c:e}")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // Highest degree first, then lexicographically decreasing exponents.
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|(a, _), (b, _)| b.degree().cmp(&a.degree()).then(b.cmp(a)));
        for (idx, (alpha, &c)) in terms.into_iter().enumerate() {
            let mag = c.abs();
            if idx == 0 {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            }
            let mut factors = Vec::new();
            if mag != 1.0 || alpha.degree() == 0 {
                factors.push(fmt_coef(mag));
            }
            for (k, &e) in alpha.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(format!("x{k}")),
                    _ => factors.push(format!("x{k}^{e}")),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

/// Structured form `{dim, terms: [{exp, coef}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialRecord {
    pub dim: usize,
    pub terms: Vec<TermRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub exp: Vec<u32>,
    pub coef: f64,
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = PolynomialRecord::deserialize(d)?;
        Polynomial::from_record(rec).map_err(serde::de::Error::custom)
    }
}
