use thiserror::Error;

/// Errors produced by graph construction, density evolution, threshold
/// estimation and file handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("index {index} out of range for chain length {len}")]
    Index { index: usize, len: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("range error: {0}")]
    Range(String),

    /// A graph or base matrix violates its structural invariants.
    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },

    #[error(
        "invalid bracket: alpha_lo={lo} (success={lo_success}), alpha_hi={hi} (success={hi_success}); \
         need success at alpha_lo and failure at alpha_hi"
    )]
    Bracket {
        lo: f64,
        lo_success: bool,
        hi: f64,
        hi_success: bool,
    },

    /// A success was recorded at a load above a recorded failure during
    /// bisection.
    #[error(
        "non-monotone success: success at alpha={success_at} above failure at alpha={failure_at}"
    )]
    NonMonotone { success_at: f64, failure_at: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
