use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} = {value} outside the admissible range {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: String,
    },

    #[error("coordinates do not sum to zero (sum = {sum:e})")]
    NotInHyperplane { sum: f64 },

    #[error("expected a unit vector, got norm {norm}")]
    NonUnit { norm: f64 },

    #[error("k = {k} is too large for explicit enumeration")]
    TooLarge { k: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("non-hyperbolic spectrum: eigenvalue {eigenvalue:e} below threshold")]
    NonHyperbolic { eigenvalue: f64 },

    #[error("Newton iteration failed after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("singular Jacobian")]
    SingularJacobian,

    #[error("continuation step underflow near lambda = {lambda}")]
    StepUnderflow { lambda: f64 },

    #[error("lambda = {lambda} lies within {distance:e} of the fold value {fold}")]
    NearFold {
        lambda: f64,
        fold: f64,
        distance: f64,
    },

    #[error("curve contains no fold")]
    NoFold,

    #[error("grid refinement floor reached in [{lo}, {hi}]")]
    RefinementFloor { lo: f64, hi: f64 },

    #[error("point leaves the plateau of the radial bump (residual {residual:e})")]
    OutsidePlateau { residual: f64 },

    #[error("flow failure: {0}")]
    Flow(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn out_of_range<T>(what: &'static str, value: impl Into<f64>, range: impl Into<String>) -> Result<T> {
    Err(Error::OutOfRange {
        what,
        value: value.into(),
        range: range.into(),
    })
}
