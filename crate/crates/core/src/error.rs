use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TeError {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("duplicate edge {src}->{dst}")]
    DuplicateEdge { src: String, dst: String },

    #[error("invalid commodity {index}: {reason}")]
    InvalidCommodity { index: usize, reason: String },

    #[error("path {path} of commodity {commodity} references unknown edge {edge}")]
    UnknownEdge {
        commodity: usize,
        path: usize,
        edge: usize,
    },

    #[error("path {path} of commodity {commodity} is malformed: {reason}")]
    InvalidPath {
        commodity: usize,
        path: usize,
        reason: String,
    },

    #[error("path set covers {got} commodities, expected {expected}")]
    PathSetMismatch { expected: usize, got: usize },

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("root solver failed for commodity {commodity}: {reason}")]
    RootSolver { commodity: usize, reason: String },

    #[error("non-finite iterate detected at iteration {iteration} ({what})")]
    Diverged { iteration: usize, what: String },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("oracle out of domain: {0}")]
    OracleDomain(String),

    #[error("commodity sets differ between allocation and reference")]
    CommodityMismatch,
}

pub type Result<T> = std::result::Result<T, TeError>;
