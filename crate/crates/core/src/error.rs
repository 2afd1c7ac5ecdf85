use thiserror::Error;

/// Errors raised while building or solving the coupled problem.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("interface mismatch: {0}")]
    Interface(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("ill-posed configuration: {0}")]
    Configuration(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("operator `{operator}` is not positive definite (p^T A p = {curvature:e})")]
    Indefinite { operator: String, curvature: f64 },

    #[error("non-finite residual at iteration {0}")]
    NonFinite(usize),

    #[error("dense oracle limited to {limit} interface unknowns, got {got}")]
    OracleTooLarge { limit: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
