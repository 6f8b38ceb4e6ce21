use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Fock dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("truncation too small: trace deficit {deficit:.3e} exceeds tolerance {tolerance:.3e}")]
    TruncationTooSmall { deficit: f64, tolerance: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("state is singular: largest eigenvalue {lambda_max:.3e} is not positive")]
    SingularState { lambda_max: f64 },

    #[error("derivative order {order} unsupported (max {max})")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),

    #[error("flavor mismatch: {0}")]
    FlavorMismatch(String),

    #[error("estimator for {0} requires a {1} function g")]
    BadGFunction(String, &'static str),

    #[error("parse error: {0}")]
    Parse(String),
}
