use thiserror::Error;

/// Errors raised by the simulator and its diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("negative density {value:e} at node {index}")]
    Negative { index: usize, value: f64 },

    #[error("non-finite density at node {index}")]
    NonFinite { index: usize },

    #[error("profile is not radially nonincreasing (defect {defect:e} exceeds {tolerance:e})")]
    MonotonicityViolation { defect: f64, tolerance: f64 },

    #[error("initial data is not admissible: {0}")]
    Admissibility(String),

    #[error("functions live on different grids")]
    GridMismatch,

    #[error("required time step {required:e} is below dt_min {dt_min:e} at t = {t}")]
    DtUnderflow { t: f64, required: f64, dt_min: f64 },

    #[error("Picard differences stopped decreasing at iterate {k} (d_k / d_(k-1) = {ratio})")]
    NonConvergence { k: usize, ratio: f64 },

    #[error("no radius r0 satisfies the smallness condition (smallest resolved radius {r_min})")]
    NoValidR0 { r_min: f64 },

    #[error("diffusivity lower bound fails: a = {a:e} < {floor:e} at r = {r}")]
    LowerBoundFails { r: f64, a: f64, floor: f64 },

    #[error("barrier fit failed: {0}")]
    FitFailure(String),

    #[error("sampling failure: {0}")]
    SamplingFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
