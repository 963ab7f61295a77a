use thiserror::Error;

/// Everything that can go wrong in the library, sorted by how the CLI maps it
/// to an exit code: bad inputs and bad config files are code 2, numerical
/// non-convergence is code 3. Bound violations are not errors — they are
/// reported by the experiment runners as data.
#[derive(Error, Debug)]
pub enum Error {
    /// Invalid argument or incompatible inputs (dimension mismatch, slot
    /// overlap, non-normalized state, ...).
    #[error("{0}")]
    Invalid(String),

    /// Config file diagnostic with a 1-based line number.
    #[error("{path}:{line}: {msg}")]
    Config {
        path: String,
        line: usize,
        msg: String,
    },

    /// An iterative method failed to converge; `residual` is the best value
    /// achieved before giving up.
    #[error("numerical failure in {context}: residual {residual:e}")]
    Numerical { context: String, residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// CLI exit code for this error: 2 for configuration/input problems,
    /// 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_) | Error::Config { .. } | Error::Io(_) => 2,
            Error::Numerical { .. } => 3,
        }
    }
}
