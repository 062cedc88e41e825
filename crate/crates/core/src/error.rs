use thiserror::Error;

/// Errors produced by the library.
///
/// The variants map one-to-one onto the CLI exit codes: validation (2),
/// numeric (3), and I/O (4). `Domain` and `Config` are reported as
/// validation failures.
#[derive(Debug, Error)]
pub enum Error {
    /// A state, point set, or model violated one of its invariants.
    #[error("invalid input: {0}")]
    Validation(String),

    /// An input lies outside the domain of the operation (non-finite
    /// coordinates, zero-norm states, out-of-range weights).
    #[error("domain error: {0}")]
    Domain(String),

    /// An optimizer or scan configuration is unusable.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical routine failed (root bracketing, eigensolver, fit).
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_finite(what: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be finite, got {values:?}")))
    }
}
