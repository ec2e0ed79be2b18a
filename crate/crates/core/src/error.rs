use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A grid does not resolve the requested coefficient box.
    #[error("aliasing: grid with {points} points per axis cannot resolve mode box {mode_box}")]
    Aliasing { points: usize, mode_box: usize },
    /// A configured node, cube or lattice budget would be exceeded.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    /// An iterative method or a refinement check failed to meet its tolerance.
    #[error("tolerance not met in {check}: {detail}")]
    Tolerance { check: String, detail: String },
    /// The sampled function is not strongly null within the available range.
    #[error("not strongly null: {0}")]
    NotStronglyNull(String),
    /// A binary container could not be decoded.
    #[error("corrupt container: {0}")]
    CorruptContainer(String),
    /// The container was written with an unsupported format version.
    #[error("unsupported container version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn tolerance(check: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Tolerance {
            check: check.into(),
            detail: detail.into(),
        }
    }
}
