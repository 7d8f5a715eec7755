use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {index} out of range for graph with {num_nodes} nodes")]
    InvalidNode { index: usize, num_nodes: usize },

    #[error("graph contains a cycle")]
    Cyclic,

    #[error("self-loop on node {0}")]
    SelfLoop(usize),

    #[error("node sets are not pairwise disjoint")]
    OverlappingSets,

    #[error("node count mismatch: {0} vs {1}")]
    NodeCountMismatch(usize, usize),

    #[error("graph has {0} nodes; enumeration supports at most {1}")]
    TooManyNodes(usize, usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("sample too small: need at least {needed} rows, got {got}")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("gaussian process optimisation failed on every start: {0}")]
    GpOptimization(String),

    #[error("cholesky factorisation failed even with maximal jitter")]
    NotPositiveDefinite,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("csv error at row {row}, column {column}: {message}")]
    Csv { row: usize, column: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
