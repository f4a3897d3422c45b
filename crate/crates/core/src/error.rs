//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid too large: {points_per_axis}^{dim} exceeds {max} nodes")]
    GridTooLarge {
        dim: usize,
        points_per_axis: usize,
        max: usize,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on incompatible grids")]
    GridMismatch,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("value {value} below floor {floor} at node {node}")]
    BelowFloor { node: usize, value: f64, floor: f64 },

    #[error("intensity must be strictly positive at node {node}")]
    NonPositiveIntensity { node: usize },

    #[error("point {index} lies outside [0,1]^d")]
    PointOutOfDomain { index: usize },

    #[error("link '{kind}' is not invertible")]
    LinkNotInvertible { kind: &'static str },

    #[error("value {value} outside the open link range at node {node}")]
    OutsideLinkRange { node: usize, value: f64 },

    #[error("covariance factorization failed after jitter escalation (size {size})")]
    CholeskyFailed { size: usize },

    #[error("dataset must contain at least one pattern")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed input file {path}: {reason}")]
    MalformedFile { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// True for errors caused by bad user input (configs, arguments, input
    /// files) rather than runtime failures. The CLI maps these to exit code 1.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::GridTooLarge { .. }
                | Error::InvalidGrid(_)
                | Error::GridMismatch
                | Error::DimensionMismatch { .. }
                | Error::BelowFloor { .. }
                | Error::PointOutOfDomain { .. }
                | Error::LinkNotInvertible { .. }
                | Error::OutsideLinkRange { .. }
                | Error::EmptyDataset
                | Error::InvalidConfig(_)
                | Error::MalformedFile { .. }
                | Error::Toml(_)
        )
    }
}
