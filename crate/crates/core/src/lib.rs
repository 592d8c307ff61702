//! Few-shot keyword spotting with metric-space meta learning agents, and
//! n-best hypothesis reranking driven by the spotted keywords.

pub mod agents;
pub mod autodiff;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod embeddings;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod rerank;
pub mod rng;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
