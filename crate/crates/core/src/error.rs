//! Error type shared by all simulator modules.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A precondition on an operation argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Rejection sampling exhausted its retry budget.
    #[error("sampling failure: no point accepted within {budget} tries ({context})")]
    SamplingFailure { budget: u32, context: String },

    /// No SCBS/hotspot placement realized the requested gamma bin.
    #[error(
        "gamma bin {bin_db} dB infeasible: no placement accepted within {budget} tries \
         (drop {drop_index})"
    )]
    BinInfeasible {
        bin_db: f64,
        budget: u32,
        drop_index: u32,
    },

    /// Bad configuration key, value, or file.
    #[error("config error: {0}")]
    Config(String),

    /// I/O failure, with the path that caused it.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error class (documented in `measim --help`).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::BinInfeasible { .. } => 3,
            Error::Io { .. } => 4,
            Error::InvalidArgument(_) | Error::SamplingFailure { .. } => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
