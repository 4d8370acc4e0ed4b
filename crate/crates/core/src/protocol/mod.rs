//! FedISL and FedNonISL state machines, routing trees and sink election.
//!
//! Every machine is single-owner and side-effect free apart from its own
//! state: it consumes one event and returns the actions the simulator must
//! carry out. Predictions about geometry and timing come in through
//! [`SatelliteEnv`].

mod message;
mod nonisl;
mod ps;
mod routing;
mod satellite;
mod sink;

pub use message::{Message, MessageKind, SinkField, Wire};
pub use nonisl::{FedNonIslPs, NonIslPhase, NonIslSat};
pub use ps::{FedIslPs, PsDecision, PsPhase, UpdateOutcome};
pub use routing::{build_routing_tree, ring_distance, RoutingTree};
pub use satellite::{SatAction, SatEvent, SatPhase, SatState, SatelliteEnv};
pub use sink::{
    aggregation_time, estimate_aggregation_time, max_adjacent_transfer_time, next_contact_start, select_sink,
    SinkSearch,
};

use thiserror::Error;

use crate::learning::LearningError;
use crate::orbital::NodeId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("sink {sink:?} is not a member of plane {plane}")]
    SinkNotInPlane { sink: NodeId, plane: usize },
    #[error("message from unknown node {0:?}")]
    UnknownNode(NodeId),
    #[error("epoch mismatch: expected {expected}, got {found}")]
    EpochMismatch { expected: u64, found: u64 },
    #[error("update for node {node:?} from {from:?}, which is not one of its children")]
    NotAChild { node: NodeId, from: NodeId },
    #[error("duplicate update from plane {plane}")]
    DuplicateUpdate { plane: usize },
    #[error("unexpected {kind:?} message")]
    UnexpectedMessage { kind: MessageKind },
    #[error("message carries no payload")]
    MissingPayload,
    #[error(transparent)]
    Learning(#[from] LearningError),
}

/// When a baseline satellite returns its trained update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UploadTrigger {
    /// As soon as training has finished and the PS is visible.
    #[default]
    Immediate,
    /// At the first PS contact that starts after training has finished.
    NextContact,
}

/// Tunables of the satellite behaviour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Delay before retrying after the PS asked to reconnect.
    pub reconnect_wait_s: f64,
    /// The sink waits for a PS contact starting within this many `T_c` instead of falling back.
    pub grace_hops: f64,
    pub nonisl_upload: UploadTrigger,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self { reconnect_wait_s: 10.0, grace_hops: 2.0, nonisl_upload: UploadTrigger::Immediate }
    }
}
