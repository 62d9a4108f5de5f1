use thiserror::Error;

use crate::roadmap::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed PGM: {0}")]
    Pgm(String),
    #[error("invalid occupancy grid: {0}")]
    InvalidGrid(String),
    #[error("{what} at ({x}, {y}) is in collision")]
    InCollision { what: &'static str, x: f64, y: f64 },
    #[error("placed only {placed} of {requested} free samples in {attempts} attempts")]
    SamplingExhausted {
        placed: usize,
        requested: usize,
        attempts: usize,
    },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("edge {edge} has non-positive {which} weight {value}")]
    NonPositiveWeight {
        edge: usize,
        which: &'static str,
        value: f64,
    },
    #[error("invalid threat: {0}")]
    InvalidThreat(String),
    #[error("quadrature point coincides with zero-radius threat at ({x}, {y})")]
    SingularThreat { x: f64, y: f64 },
    #[error("invalid cost model: {0}")]
    InvalidCostModel(String),
    #[error("node {0} is unreachable from the source")]
    Unreachable(NodeId),
    #[error("no reachable node")]
    NothingReachable,
    #[error("invalid budget grid: {0}")]
    InvalidBudget(String),
    #[error("edge {edge}: secondary cost {cost} is {ratio} budget levels, beyond the representable range")]
    LevelOverflow { edge: usize, cost: f64, ratio: f64 },
    #[error("budget table of {entries} entries exceeds the cap of {cap}")]
    TableTooLarge { entries: usize, cap: usize },
    #[error("table entry for node {node} at level {level} is infinite")]
    InfiniteEntry { node: NodeId, level: usize },
    #[error("planning deadline exceeded")]
    DeadlineExceeded,
    #[error("oracle label cap of {0} exceeded")]
    LabelCapExceeded(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
