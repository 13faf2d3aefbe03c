use thiserror::Error;

use crate::network::{LayerId, ZoneId};

/// Errors raised by network, metric, percolation and scenario operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown zone `{0}`")]
    UnknownZone(ZoneId),
    #[error("unknown layer `{0}`")]
    UnknownLayer(LayerId),
    #[error("edge ({u}, {v}, {layer}) not found")]
    MissingEdge {
        u: ZoneId,
        v: ZoneId,
        layer: LayerId,
    },
    #[error("unknown stop `{stop}` on line `{line}`")]
    UnknownStop { line: LayerId, stop: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("conflict: {0}")]
    Conflict(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
