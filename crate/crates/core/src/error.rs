use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("{op}: sequence of length {len} is shorter than required {min}")]
    TooShort {
        op: &'static str,
        len: usize,
        min: usize,
    },

    #[error("{0}: zero-norm vector (degenerate encoding)")]
    ZeroNorm(&'static str),

    #[error("variable belongs to a different tape")]
    Detached,

    #[error("backward already ran on this tape; run a new forward pass first")]
    BackwardConsumed,

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("non-finite gradient at step {step} in parameter `{param}`")]
    NonFiniteGradient { step: u64, param: String },

    #[error("agent `{agent}` has no {head} weights")]
    MissingHead {
        agent: &'static str,
        head: &'static str,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
