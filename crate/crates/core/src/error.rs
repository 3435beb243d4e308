use thiserror::Error;

use crate::smoothing::SmoothingCertificate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("refinement would produce {requested} vertices (cap {cap})")]
    CapExceeded { requested: usize, cap: usize },

    #[error("degenerate cell {cell}: {reason}")]
    Degenerate { cell: usize, reason: String },

    #[error("singular metric on cell {cell}")]
    SingularMetric { cell: usize },

    #[error("field size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("vertex {0} is unreachable from the base vertex")]
    Unreachable(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-positive value {value} at vertex {vertex}")]
    NonPositive { vertex: usize, value: f64 },

    #[error("smoothing certification failed after {} passes: lipschitz {:.6}, tube violation {:.3e}, clearance {:.3e}", .0.kernel_passes, .0.measured_lipschitz, .0.max_tube_violation, .0.min_tube_clearance)]
    Certification(Box<SmoothingCertificate>),

    #[error("metric surgery failed on cell {cell}: covector norm {norm} is not below 1")]
    Surgery { cell: usize, norm: f64 },

    #[error("speed matching infeasible on edge {edge}: {reason}")]
    Infeasible { edge: usize, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("metric expression: {0}")]
    Expression(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
