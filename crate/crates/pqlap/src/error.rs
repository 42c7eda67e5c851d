//! Crate-wide error type and exit-code mapping.

/// Errors surfaced by the library. The CLI maps these onto its exit-code
/// contract: config errors are usage/data problems (65), nonconvergence is 2,
/// certificate failures are 3, everything else is a generic failure.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("linear solve breakdown: {0}")]
    Linear(String),
    #[error("nonconvergence: {0}")]
    Nonconvergence(String),
    #[error("certificate failure: {0}")]
    Certificate(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("singular right-hand side: {0}")]
    SingularRhs(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for this error under the CLI contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 65,
            Error::Nonconvergence(_) => 2,
            Error::Certificate(_) => 3,
            _ => 1,
        }
    }
}
