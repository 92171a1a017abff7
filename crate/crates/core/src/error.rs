use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlatError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("ambient dimension {0} is outside the supported range 2..=5")]
    UnsupportedDimension(usize),

    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("expected a positive value for {what}, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("operation undefined for the zero polynomial")]
    ZeroPolynomial,

    #[error("operation undefined for a constant polynomial")]
    ConstantPolynomial,

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("point is not a root: |p(x)| = {residual:e} exceeds tolerance {tolerance:e}")]
    NotARoot { residual: f64, tolerance: f64 },

    #[error("polynomial is not harmonic")]
    NotHarmonic,

    #[error("empty point set: {0}")]
    EmptySet(&'static str),

    #[error("resolution {resolution} exceeds radius {radius}")]
    ResolutionTooCoarse { resolution: f64, radius: f64 },

    #[error("hyperplane misses the ball: distance {distance} > radius {radius}")]
    NoIntersection { distance: f64, radius: f64 },

    #[error("all homogeneous parts of degree >= 1 vanish at the center")]
    NoNonvanishingPart,

    #[error("scales must be positive and strictly decreasing")]
    ScalesNotDecreasing,

    #[error("scale grid reaches {min_scale}, below 4 x resolution = {floor}")]
    ScaleGridTooFine { min_scale: f64, floor: f64 },

    #[error("ball B(y, s r) is not contained in B(x, r)")]
    ContainmentViolated,

    #[error("root is not classified flat")]
    RootNotFlat,

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("{what} = {value} is out of range ({range})")]
    OutOfRange {
        what: &'static str,
        value: i64,
        range: &'static str,
    },

    #[error("{what} = {value} is invalid (expected {expected})")]
    InvalidParameter {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = FlatError> = std::result::Result<T, E>;

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if (crate::MIN_DIM..=crate::MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(FlatError::UnsupportedDimension(n))
    }
}

pub(crate) fn check_positive(what: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(FlatError::NonPositive { what, value })
    }
}
