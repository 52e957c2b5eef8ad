use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum AeqError {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite {what} encountered ({value})")]
    NonFinite { what: &'static str, value: f64 },

    #[error("value {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    /// A per-variable slice of the global energy failed to be a
    /// positive-curvature quadratic, so exact coordinate minimization
    /// is not defined there.
    #[error("non-convex slice: curvature {curvature} (unbounded below on the given interval)")]
    Curvature { curvature: f64 },

    #[error("divergence in {phase}: {what} reached {value:e}")]
    Diverged {
        phase: &'static str,
        what: &'static str,
        value: f64,
    },

    #[error("unsupported operation: {0}")]
    Unsupported(&'static str),

    /// A continuously-checked identity failed beyond its error budget.
    #[error("self-check '{what}' failed: gap {gap:e} exceeds budget {budget:e}")]
    SelfCheck {
        what: &'static str,
        gap: f64,
        budget: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("IDX parse error at byte {offset}: {reason}")]
    IdxParse { offset: usize, reason: String },

    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, AeqError>;
