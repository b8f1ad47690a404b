use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Dimension {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("length mismatch in {op}: {left} vs {right}")]
    Length {
        op: &'static str,
        left: usize,
        right: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("segment ids are not grouped contiguously: id {id} at position {index} follows a larger id")]
    NonContiguousSegments { id: usize, index: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: self-loop on node `{node}` (self-loops are added internally, never ingested)")]
    SelfLoop { line: usize, node: String },
    #[error("node {node} out of range for a graph with {num_nodes} nodes")]
    InvalidNode { node: usize, num_nodes: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("graph has {edges} edges but at least {required} are required")]
    TooFewEdges { edges: usize, required: usize },
    #[error("requested {requested} negative pairs but the graph has only {available} non-edges")]
    NegativeBound { requested: usize, available: usize },
    #[error("{0} requires at least one positive and one negative label")]
    SingleClass(&'static str),
    #[error("{0}: empty input")]
    Empty(&'static str),
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("cache does not match the graph it is applied to: {0}")]
    CacheMismatch(String),
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("model file schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: String, expected: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures caused by floating-point blow-up rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite(_) | Error::Divergence { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
