//! Error type shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, OreyError>;

#[derive(Debug, Error)]
pub enum OreyError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A time or ratio argument outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Requested quantity is not defined for the given process family.
    #[error("not available: {0}")]
    NotAvailable(String),

    #[error("partition needs at least {min} steps, got {got}")]
    PartitionSize { min: usize, got: usize },

    #[error("subsample stride {stride} does not divide step count {steps}")]
    Alignment { stride: usize, steps: usize },

    #[error("path has {values} values but partition has {points} points")]
    LengthMismatch { values: usize, points: usize },

    /// Cholesky factorization failed even at the largest jitter level.
    #[error(
        "covariance matrix numerically not PSD: pivot {pivot} residual {residual:e} \
         after jitter {jitter:e}"
    )]
    NumericalPsd {
        pivot: usize,
        residual: f64,
        jitter: f64,
    },

    #[error("partitions are not nested: {0}")]
    NotNested(String),

    #[error("degenerate path: {0}")]
    DegeneratePath(String),

    #[error("no scale separation: fine min step equals coarse max step ({0:e})")]
    ScaleSeparation(f64),

    #[error("horizon mismatch: expected {expected}, got {got}")]
    HorizonMismatch { expected: f64, got: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
