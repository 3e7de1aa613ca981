use alloc::string::String;
use core::fmt;

use crate::graph::TaoId;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The edge set contains a cycle through this node.
    Cycle { node: TaoId },
    /// An edge refers to a node id that was never added.
    UnknownNode(TaoId),
    SelfLoop(TaoId),
    EmptyDag,
    /// Width is zero, not a power of two, or beyond the table's columns.
    UnsupportedWidth(usize),
    /// A place would reach past the last core or straddle two clusters.
    PlaceOutOfCluster { leader: usize, width: usize },
    /// A PTT write was attempted from a core that cannot lead this width.
    NotLeader { core: usize, width: usize },
    InvalidMeasurement,
    UnknownCore(usize),
    UnknownTaskType(String),
    Config(String),
    /// A TAO was committed twice, or a counter went below zero.
    DoubleCommit(TaoId),
    /// Workers went idle with TAOs still pending.
    Deadlock { completed: usize, total: usize },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Cycle { node } => write!(f, "cycle detected through node {node}"),
            Error::UnknownNode(id) => write!(f, "edge references unknown node {id}"),
            Error::SelfLoop(id) => write!(f, "self loop on node {id}"),
            Error::EmptyDag => f.write_str("DAG has no nodes"),
            Error::UnsupportedWidth(w) => write!(f, "unsupported resource width {w}"),
            Error::PlaceOutOfCluster { leader, width } => {
                write!(f, "place (leader {leader}, width {width}) does not fit in one cluster")
            }
            Error::NotLeader { core, width } => {
                write!(f, "core {core} is not a valid leader for width {width}")
            }
            Error::InvalidMeasurement => f.write_str("measured time must be finite and positive"),
            Error::UnknownCore(c) => write!(f, "core {c} does not exist"),
            Error::UnknownTaskType(name) => write!(f, "unknown task type `{name}`"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::DoubleCommit(id) => write!(f, "TAO {id} committed more than once"),
            Error::Deadlock { completed, total } => write!(
                f,
                "deadlock: all workers idle with {completed} of {total} TAOs completed"
            ),
        }
    }
}

impl core::error::Error for Error {}
