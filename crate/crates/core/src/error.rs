use std::fmt;

use crate::topology::NodeId;

/// Errors surfaced by configuration loading, deployment and hierarchy
/// construction. Simulation rounds themselves never fail: dead nodes are
/// recorded in the reports, not raised.
#[derive(Debug)]
pub enum SimError {
    /// Invalid configuration. The message names the offending key.
    Config(String),
    /// The communication graph is not connected; `node` is unreachable
    /// from the tree-discovery initiator.
    Disconnected { node: NodeId },
    /// An operation that requires a nonempty input received an empty one.
    EmptyInput(&'static str),
    /// Failure writing run outputs.
    Io(std::io::Error),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            SimError::Disconnected { node } => write!(
                f,
                "communication graph is disconnected: node {node} is unreachable from the initiator"
            ),
            SimError::EmptyInput(what) => write!(f, "{what} requires a nonempty input"),
            SimError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for SimError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            SimError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
