use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside the documented range of an operation.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A function argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A chain violates one of the geometric invariants.
    #[error("chain validation failed at pair ({j}, {k}): {reason}")]
    Validation { j: i64, k: i64, reason: String },

    /// Matrix assembly hit a degenerate configuration.
    #[error("assembly error: {0}")]
    Assembly(String),

    /// No sign change could be established for a root search.
    #[error("bracket error: {0}")]
    Bracket(String),

    /// An iteration did not converge.
    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Bracket(_) | Error::Convergence(_))
    }
}
