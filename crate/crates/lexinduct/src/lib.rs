//! Unsupervised induction of a hierarchical lexicon from raw byte streams.
//!
//! Words are represented as perturbed compositions of other words, bottoming
//! out in the 256 byte terminals. The search minimizes the combined
//! description length of the lexicon and of the input encoded in terms of
//! the lexicon. The learned lexicon drives three applications: segmentation
//! of delimiter-free text, bit-exact dictionary compression, and mapping
//! words to meaning symbols.

pub mod bits;
pub mod codec;
pub mod corpus;
pub mod lexicon;
pub mod meaning;
pub mod metrics;
pub mod parser;
pub mod search;
pub mod synth;

use thiserror::Error;

/// Half-open byte range `[start, end)`.
pub type ByteSpan = (usize, usize);

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus is empty{0}")]
    EmptyCorpus(&'static str),
    #[error("unknown word id {0}")]
    UnknownWord(u32),
    #[error("word definition needs at least 2 components")]
    SingletonDefinition,
    #[error("a word with this component list already exists")]
    DuplicateDefinition,
    #[error("terminals cannot be deleted")]
    TerminalDelete,
    #[error("counts are all zero")]
    AllZeroCounts,
    #[error("invalid span file: {0}")]
    BadSpans(String),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("corrupt data: {0}")]
    Corrupt(String),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
