use std::io;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("random regular graph generation failed after {restarts} restarts (M = {num_agents}, r = {degree})")]
    GenerationFailure {
        restarts: usize,
        num_agents: usize,
        degree: usize,
    },

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) => 2,
            Error::GenerationFailure { .. } => 3,
            Error::Io(_) | Error::Csv(_) => 4,
            Error::ProtocolViolation(_) | Error::InvariantViolation(_) => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
