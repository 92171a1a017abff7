//! The relative-size functional `ζ_k`, polynomial sup norms, local flatness
//! `θ` and the flat/singular dichotomy for roots of harmonic polynomials.

mod flatness;
mod norms;

pub use flatness::*;
pub use norms::*;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, FlatError, Result};
use crate::geometry::recenter_at_root;
use crate::poly::{Degree, Polynomial};

/// A value in `[0, +∞]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedNonNegReal {
    Finite(f64),
    Infinite,
}

impl ExtendedNonNegReal {
    /// `num / den` for non-negative arguments; `x / 0` with `x > 0` is `+∞`.
    ///
    /// # Panics
    /// On `0 / 0`, which callers must guard against.
    pub fn ratio(num: f64, den: f64) -> Self {
        assert!(!(num == 0.0 && den == 0.0), "0/0 in extended ratio");
        if den == 0.0 {
            ExtendedNonNegReal::Infinite
        } else {
            ExtendedNonNegReal::Finite(num / den)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedNonNegReal::Finite(_))
    }

    /// The value as an `f64`, with `+∞` mapped to `f64::INFINITY`.
    pub fn value(self) -> f64 {
        match self {
            ExtendedNonNegReal::Finite(v) => v,
            ExtendedNonNegReal::Infinite => f64::INFINITY,
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl PartialOrd for ExtendedNonNegReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use ExtendedNonNegReal::*;
        match (self, other) {
            (Infinite, Infinite) => Some(Ordering::Equal),
            (Infinite, Finite(_)) => Some(Ordering::Greater),
            (Finite(_), Infinite) => Some(Ordering::Less),
            (Finite(a), Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for ExtendedNonNegReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedNonNegReal::Finite(v) => write!(f, "{v}"),
            ExtendedNonNegReal::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtendedNonNegReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedNonNegReal::Finite(v) => s.serialize_f64(*v),
            ExtendedNonNegReal::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedNonNegReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v >= 0.0 => Ok(ExtendedNonNegReal::Finite(v)),
            Raw::Str(s) if s == "inf" => Ok(ExtendedNonNegReal::Infinite),
            _ => Err(serde::de::Error::custom("expected a non-negative number or `inf`")),
        }
    }
}

/// Unit-sphere sup norms of every homogeneous part of `p` about a center.
///
/// Since `‖p_j‖_{B_r} = r^j ‖p_j‖_{S^{n-1}}`, one profile answers `ζ_k` for
/// every radius.
#[derive(Clone, Debug, PartialEq)]
pub struct PartNorms {
    /// `sups[j]` is the unit-sphere sup of the degree-`j` part (0 if it vanishes).
    pub sups: Vec<f64>,
}

impl PartNorms {
    pub fn new(p: &Polynomial, x: &[f64]) -> Result<Self> {
        Ok(Self::of_recentered(&p.recenter(x)?))
    }

    /// Profile of `q` about the origin.
    pub fn of_recentered(q: &Polynomial) -> Self {
        let deg = q.degree().value().unwrap_or(0);
        let sups = (0..=deg)
            .map(|j| {
                let part = q.graded_component(j);
                if part.is_zero() {
                    0.0
                } else {
                    sphere_sup(&part)
                }
            })
            .collect();
        PartNorms { sups }
    }

    pub fn zeta(&self, k: u32, r: f64) -> ExtendedNonNegReal {
        let k = k as usize;
        let sk = self.sups.get(k).copied().unwrap_or(0.0);
        if sk == 0.0 {
            return ExtendedNonNegReal::Infinite;
        }
        let mut best = 0.0f64;
        for (j, &sj) in self.sups.iter().enumerate() {
            if j == k || sj == 0.0 {
                continue;
            }
            let v = sj / sk * r.powi(j as i32 - k as i32);
            best = best.max(v);
        }
        ExtendedNonNegReal::Finite(best)
    }
}

/// `ζ_k(p, x, r) = max_{j≠k} ‖p_j^{(x)}‖_{B_r} / ‖p_k^{(x)}‖_{B_r}`.
pub fn zeta(p: &Polynomial, k: u32, x: &[f64], r: f64) -> Result<ExtendedNonNegReal> {
    if p.is_zero() {
        return Err(FlatError::ZeroPolynomial);
    }
    if p.is_constant() {
        return Err(FlatError::ConstantPolynomial);
    }
    check_positive("radius", r)?;
    Ok(PartNorms::new(p, x)?.zeta(k, r))
}

/// `√2 (d - 1) ζ_1(p, x, r)` clamped to `[0, 1]`: an upper bound for the
/// local flatness of `Σ_p` at a root `x`.
pub fn flatness_from_zeta_bound(p: &Polynomial, x: &[f64], r: f64) -> Result<f64> {
    check_positive("radius", r)?;
    let q = recenter_at_root(p, x, r)?;
    let d = match p.degree() {
        Degree::Zero => return Err(FlatError::ZeroPolynomial),
        Degree::Finite(0) => return Err(FlatError::ConstantPolynomial),
        Degree::Finite(d) => d,
    };
    if d == 1 {
        return Ok(0.0);
    }
    let z = PartNorms::of_recentered(&q).zeta(1, r);
    Ok((std::f64::consts::SQRT_2 * (d - 1) as f64 * z.value()).min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub s: f64,
    pub lhs: ExtendedNonNegReal,
    pub rhs: ExtendedNonNegReal,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearDecayReport {
    pub r: f64,
    pub zeta_r: ExtendedNonNegReal,
    pub rows: Vec<DecayRow>,
    pub all_pass: bool,
}

/// Relative slack allowed in the decay inequality.
pub const DECAY_SLACK: f64 = 1e-6;

/// Checks `ζ_1(p, x, s r) <= s ζ_1(p, x, r)` at a root `x` for each `s ∈ (0, 1)`.
pub fn linear_decay_check(p: &Polynomial, x: &[f64], r: f64, s_values: &[f64]) -> Result<LinearDecayReport> {
    check_positive("radius", r)?;
    for &s in s_values {
        if !(s > 0.0 && s < 1.0) {
            return Err(FlatError::InvalidParameter {
                what: "s",
                value: s,
                expected: "0 < s < 1",
            });
        }
    }
    let q = recenter_at_root(p, x, r)?;
    if q.is_zero() {
        return Err(FlatError::ConstantPolynomial);
    }
    let norms = PartNorms::of_recentered(&q);
    let zr = norms.zeta(1, r);
    let rows: Vec<DecayRow> = s_values
        .iter()
        .map(|&s| {
            let lhs = norms.zeta(1, s * r);
            let rhs = match zr {
                ExtendedNonNegReal::Finite(v) => ExtendedNonNegReal::Finite(s * v),
                ExtendedNonNegReal::Infinite => ExtendedNonNegReal::Infinite,
            };
            let pass = match (lhs, rhs) {
                (_, ExtendedNonNegReal::Infinite) => true,
                (ExtendedNonNegReal::Infinite, _) => false,
                (ExtendedNonNegReal::Finite(a), ExtendedNonNegReal::Finite(b)) => {
                    a <= b * (1.0 + DECAY_SLACK)
                }
            };
            DecayRow { s, lhs, rhs, pass }
        })
        .collect();
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(LinearDecayReport {
        r,
        zeta_r: zr,
        rows,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Polynomial {
        s.parse().unwrap()
    }

    #[test]
    fn extended_ordering_and_format() {
        use ExtendedNonNegReal::*;
        assert!(Infinite > Finite(1e300));
        assert_eq!(Finite(2.0).max(Infinite), Infinite);
        assert_eq!(ExtendedNonNegReal::ratio(1.0, 0.0), Infinite);
        assert_eq!(Infinite.to_string(), "inf");
        assert_eq!(serde_json::to_string(&Infinite).unwrap(), "\"inf\"");
        let back: ExtendedNonNegReal = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(back, Infinite);
        let back: ExtendedNonNegReal = serde_json::from_str("0.5").unwrap();
        assert_eq!(back, Finite(0.5));
    }

    #[test]
    fn zeta_examples() {
        // ‖xy‖ = 1/2 and ‖2y‖ = 2 on the unit ball.
        let z = zeta(&p("x0*x1"), 1, &[2.0, 0.0], 1.0).unwrap();
        assert!((z.value() - 0.25).abs() < 1e-12, "{z}");
        let tac = p("x0^4 + x1^4 - x1^2");
        for r in [1.0, 0.1, 7.0] {
            assert_eq!(zeta(&tac, 1, &[0.0, 0.0], r).unwrap(), ExtendedNonNegReal::Infinite);
        }
        let hom = p("x0^3 - 3 x0*x1^2");
        assert_eq!(zeta(&hom, 3, &[0.0, 0.0], 2.0).unwrap(), ExtendedNonNegReal::Finite(0.0));
        assert!(matches!(zeta(&p("4"), 1, &[0.0, 0.0], 1.0), Err(FlatError::ConstantPolynomial)));
    }

    #[test]
    fn zeta_bound_examples() {
        assert_eq!(flatness_from_zeta_bound(&p("x0 + 2 x1"), &[0.0, 0.0], 1.0).unwrap(), 0.0);
        let b = flatness_from_zeta_bound(&p("x0*x1"), &[2.0, 0.0], 1.0).unwrap();
        assert!((b - std::f64::consts::SQRT_2 / 4.0).abs() < 1e-12);
        let b = flatness_from_zeta_bound(&p("x0*x1"), &[2.0, 0.0], 0.1).unwrap();
        assert!((b - 0.1 * std::f64::consts::SQRT_2 / 4.0).abs() < 1e-12);
        assert!(matches!(
            flatness_from_zeta_bound(&p("x0*x1"), &[2.0, 1.0], 1.0),
            Err(FlatError::NotARoot { .. })
        ));
    }

    #[test]
    fn linear_decay_examples() {
        let rep = linear_decay_check(&p("x0*x1"), &[2.0, 0.0], 1.0, &[0.5]).unwrap();
        assert!(rep.all_pass);
        assert!((rep.rows[0].lhs.value() - 0.125).abs() < 1e-12);
        let rep = linear_decay_check(&p("x0 - x1"), &[1.0, 1.0], 1.0, &[0.5, 0.25]).unwrap();
        assert!(rep.all_pass);
        assert_eq!(rep.rows[0].lhs, ExtendedNonNegReal::Finite(0.0));
        let rep = linear_decay_check(&p("x0^2 - x1^2"), &[0.0, 0.0], 1.0, &[0.5]).unwrap();
        assert!(rep.all_pass);
        assert_eq!(rep.rows[0].lhs, ExtendedNonNegReal::Infinite);
        assert!(linear_decay_check(&p("x0"), &[0.0, 0.0], 1.0, &[1.5]).is_err());
    }
}
