use thiserror::Error;

/// Errors produced by the completion toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Malformed tabular input, located by 1-based line and column.
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },

    #[error("solver failure at iteration {iteration}: {message}")]
    SolverFailure { iteration: usize, message: String },

    #[error("rank {target} unreachable: attained ranks ranged from {min_rank} to {max_rank}")]
    RankUnreachable {
        target: usize,
        min_rank: usize,
        max_rank: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors caused by the caller's data rather than by a solver.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::Parse { .. } | Error::Unsupported(_) | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
