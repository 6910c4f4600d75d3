use thiserror::Error;

use crate::kernels::params::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid device profile: {0}")]
    InvalidDevice(String),

    /// A routine argument failed validation. `index` is the 1-based position
    /// of the argument in the routine's parameter list (context excluded).
    #[error("{routine}: argument {index} ({name}) is invalid: {reason}")]
    InvalidArgument {
        routine: &'static str,
        index: usize,
        name: &'static str,
        reason: String,
    },

    #[error("range [{offset}, {offset}+{len}) is outside the buffer of length {buffer_len}")]
    OutOfRange {
        offset: usize,
        len: usize,
        buffer_len: usize,
    },

    #[error("buffer was allocated by a different context")]
    ContextMismatch,

    #[error("matrix is singular: zero on the diagonal at index {0}")]
    Singular(usize),

    #[error("invalid kernel configuration: {}", join_violations(.0))]
    InvalidConfiguration(Vec<Violation>),

    #[error("device resource exceeded: {0}")]
    Resource(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("tuning failed: {0}")]
    Tuning(String),

    #[error("parameter lookup failed: {0}")]
    Lookup(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn arg(
        routine: &'static str,
        index: usize,
        name: &'static str,
        reason: impl Into<String>,
    ) -> Self {
        Error::InvalidArgument {
            routine,
            index,
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
