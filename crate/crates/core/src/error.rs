use thiserror::Error;

/// Errors produced by the analysis, planning and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("drift matrix has no complex eigenvalue pair (discriminant {discriminant:e})")]
    NotComplexSpectrum { discriminant: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("zero vector where a direction is required")]
    ZeroVector,

    #[error("point is off the line (residual {residual:e})")]
    OffLine { residual: f64 },

    #[error("spiral endpoints coincide")]
    DegenerateSpiral,

    #[error("control range must satisfy u⁻ < u⁺ (got [{lower}, {upper}])")]
    InvalidRange { lower: f64, upper: f64 },

    #[error("control vector must be nonzero")]
    ZeroControlVector,

    #[error("control value {u} outside [{lower}, {upper}]")]
    InvalidControl { u: f64, lower: f64, upper: f64 },

    #[error("segment duration must be finite and nonnegative (got {0})")]
    InvalidDuration(f64),

    #[error("trace of the drift is zero within the classification band")]
    TraceZero,

    #[error("trace of the drift is not zero (tr A = {0:e})")]
    TraceNotZero(f64),

    #[error("({s}, {tau}) lies outside the domain [0, {s_max}] x [0, {tau_max}]")]
    OutOfDomain {
        s: f64,
        tau: f64,
        s_max: f64,
        tau_max: f64,
    },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("target is not in the interior of the control set (margin {margin:e})")]
    TargetNotInterior { margin: f64 },

    #[error("epsilon {epsilon:e} needs more than {cap} iterate pairs")]
    EpsilonTooSmall { epsilon: f64, cap: usize },

    #[error("no spiral intersection within a window of {window} time units")]
    NoIntersectionFound { window: f64 },

    #[error("point set is empty")]
    EmptySet,

    #[error("start point lies outside the grid bounds")]
    OutOfBounds,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
