use thiserror::Error;

/// Errors raised by the angle-finding pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QspError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("target violates a precondition: {0}")]
    Precondition(String),

    #[error("normalization error: sup |part| = {sup:.3e} is not below 1")]
    Normalization { sup: f64 },

    #[error(
        "root finder did not converge after {iterations} iterations (best residual {residual:.3e})"
    )]
    RootsNotConverged { iterations: usize, residual: f64 },

    #[error("root classification failed: {0}")]
    Classification(String),

    #[error(
        "target reaches |f| = 1 on the sampling grid (max |f| = {max_abs:.16}); rescale the target"
    )]
    Singularity { max_abs: f64 },

    #[error("completed pair violates the unitarity condition (certificate {certificate:.3e} exceeds {tol:.0e})")]
    Uncertified { certificate: f64, tol: f64 },

    #[error("Hankel null space is not one-dimensional: {0}")]
    DegenerateNullSpace(String),

    #[error("linear system is rank deficient (pivot ratio {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error(
        "halving failed at degree {degree}: {reason}; retry with capitalization (eps_cap = 1e-8)"
    )]
    HalvingInstability { degree: usize, reason: String },

    #[error("leading coefficients degenerate at carving step {step}: {reason}")]
    Degenerate { step: usize, reason: String },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("timed out after {0} s")]
    Timeout(u64),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, QspError>;

impl From<std::io::Error> for QspError {
    fn from(e: std::io::Error) -> Self {
        QspError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for QspError {
    fn from(e: serde_json::Error) -> Self {
        QspError::Format(e.to_string())
    }
}

impl From<csv::Error> for QspError {
    fn from(e: csv::Error) -> Self {
        QspError::Io(e.to_string())
    }
}
