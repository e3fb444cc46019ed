use std::io;

use thiserror::Error;

use crate::search::ModelCandidate;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("data format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("data consistency error: {0}")]
    Consistency(String),

    #[error("numerical fault in neuron {neuron}: {quantity} is not finite")]
    NumericalFault { neuron: usize, quantity: &'static str },

    #[error("infeasible constraints: no candidate satisfies memory and energy budgets ({} candidates explored)", log.len())]
    Infeasible { log: Vec<ModelCandidate> },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Usage(_) => 2,
            Error::Format { .. } | Error::Consistency(_) => 3,
            Error::Infeasible { .. } => 4,
            Error::Io(e) if e.kind() == io::ErrorKind::NotFound => 2,
            _ => 1,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn format(offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: msg.into(),
        }
    }
}
