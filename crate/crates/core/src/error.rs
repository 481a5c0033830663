use thiserror::Error;

use crate::quantizer::Quantizer;

pub type Result<T> = std::result::Result<T, QprError>;

#[derive(Debug, Error)]
pub enum QprError {
    /// An argument lies outside the domain of a mathematical function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// An iterative eigen- or root-solver stopped before reaching tolerance.
    #[error("{what} did not converge (residual {residual:e})")]
    NonConvergence { what: &'static str, residual: f64 },

    /// Lloyd-Max design exhausted its iteration budget. Carries the last iterate.
    #[error("Lloyd-Max design did not converge after {iterations} iterations (last movement {movement:e})")]
    LloydNonConvergence {
        iterations: usize,
        movement: f64,
        last: Box<Quantizer>,
    },

    #[error("degenerate pair: signals are collinear")]
    DegeneratePair,

    #[error("degenerate spectral matrix")]
    DegenerateSpectral,

    #[error("degenerate initialization: zero gradient at the starting point")]
    DegenerateInit,

    #[error("rank-deficient least-squares system (pivot {pivot:e})")]
    RankDeficient { pivot: f64 },

    #[error("uninformative measurements: Fisher information is zero")]
    Uninformative,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl QprError {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        QprError::Domain {
            func,
            detail: detail.into(),
        }
    }
}
