use std::path::PathBuf;

use crate::graph::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("nodes {0} and {1} are not connected")]
    Unreachable(NodeId, NodeId),

    #[error("nodes {0} and {1} have coincident coordinates")]
    CoincidentNodes(NodeId, NodeId),

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("graph is disconnected: node {0} is unreachable from node 0")]
    Disconnected(NodeId),

    #[error("invalid world: {0}")]
    InvalidWorld(String),

    #[error("world has no addressed doors")]
    NoAddressedDoors,

    #[error("door for address {address} cannot be framed from its goal node {node}")]
    UnframeableDoor { address: String, node: NodeId },

    #[error("house number {0:?} is not a 1-4 digit string")]
    InvalidHouseNumber(String),

    #[error("street name {0:?} is not in the vocabulary")]
    UnknownStreetName(String),

    #[error("bounding box has zero extent")]
    DegenerateBoundingBox,

    #[error("vector of length {len} does not fit in a tensor row of width {width}")]
    TensorTooNarrow { len: usize, width: usize },

    #[error("image width {image} does not match tensor width {width}")]
    ImageWidthMismatch { image: usize, width: usize },

    #[error("no panorama at {resolution} resolution for node {node}")]
    MissingPanorama { node: NodeId, resolution: &'static str },

    #[error("action {action} is not legal in task {task}; legal actions: {legal}")]
    IllegalAction {
        action: String,
        task: String,
        legal: String,
    },

    #[error("episode has terminated")]
    EpisodeTerminated,

    #[error("task {0} cannot be sampled on this world: {1}")]
    TaskUnavailable(String, String),

    #[error("invalid world spec: {0}")]
    InvalidSpec(String),

    #[error("chain is empty")]
    EmptyChain,

    #[error("content hash mismatch: meta records {expected}, files hash to {actual}")]
    HashMismatch { expected: String, actual: String },

    #[error("unsupported bundle format version {0}")]
    FormatVersion(u32),

    #[error("malformed {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors that mean a world bundle violates one of its invariants, as
    /// opposed to usage or I/O problems.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Disconnected(_)
                | Error::InvalidWorld(_)
                | Error::NoAddressedDoors
                | Error::UnframeableDoor { .. }
                | Error::HashMismatch { .. }
                | Error::FormatVersion(_)
                | Error::Malformed { .. }
                | Error::Unreachable(..)
                | Error::DegenerateBoundingBox
        )
    }
}
