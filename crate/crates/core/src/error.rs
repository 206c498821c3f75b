use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("vertex {vertex} out of range (graph has {len} vertices)")]
    VertexOutOfRange { vertex: usize, len: usize },

    #[error("agent {agent} out of range ({len} agents)")]
    AgentOutOfRange { agent: usize, len: usize },

    #[error("invalid compactness parameters: {0}")]
    InvalidSpec(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("graph is not a simple path")]
    NotAPath,

    #[error("invalid tree decomposition: {0}")]
    Decomposition(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid source instance: {0}")]
    InvalidSource(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
