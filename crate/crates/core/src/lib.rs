//! Numerical tools for measuring how flat the zero sets of polynomials are,
//! with an emphasis on harmonic polynomials.
//!
//! The crate is organised bottom-up:
//!
//! * [`poly`] polynomial arithmetic, recentering and homogeneous parts
//! * [`harmonic`] bases of homogeneous harmonic polynomials and random harmonics
//! * [`geometry`] zero-set sampling, Hausdorff distances and blow-up sequences
//! * [`regularity`] the relative-size functional `ζ_k` and local flatness `θ`
//! * [`approx`] approximation by harmonic zero sets, constant estimates and
//!   the flat/singular partition

pub mod approx;
pub mod error;
pub mod geometry;
pub mod harmonic;
pub mod optim;
pub mod poly;
pub mod regularity;
pub mod sampling;
pub mod spatial;

pub use error::{FlatError, Result};
pub use poly::{Decomposition, Degree, Evaluator, MultiIndex, Polynomial};

/// Smallest supported ambient dimension.
pub const MIN_DIM: usize = 2;
/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 5;
/// Largest supported polynomial degree.
pub const MAX_DEGREE: u32 = 20;
