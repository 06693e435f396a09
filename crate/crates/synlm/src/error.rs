use thiserror::Error;

/// Errors produced by any stage of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {offset}: {msg}")]
    TreeParse { offset: usize, msg: String },

    #[error("malformed node: {0}")]
    MalformedNode(String),

    #[error("no head-percolation rule for label `{0}`")]
    MissingRule(String),

    #[error("head percolation failed for constituent `{0}`: no child matches any pattern")]
    PercolationFailure(String),

    #[error("no binarization rule for label `{0}`")]
    MissingBinRule(String),

    #[error("invalid parse: {0}")]
    InvalidParse(String),

    #[error("negative event weight {0}")]
    NegativeWeight(f64),

    #[error("symbol `{0}` is not in the predicted alphabet")]
    UnknownSymbol(String),

    #[error("descriptor format error: {0}")]
    Descriptor(String),

    #[error("count file format error: {0}")]
    CountFile(String),

    #[error("illegal parser action {action} in state {state}")]
    IllegalAction { action: String, state: String },

    #[error("empty sentence")]
    EmptySentence,

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("decode failure: {0}")]
    DecodeFailure(String),

    #[error("lattice format error: {0}")]
    LatticeFormat(String),

    #[error("model configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
