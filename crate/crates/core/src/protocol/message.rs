use crate::learning::ModelParams;
use crate::orbital::NodeId;

/// Wire sizes handed to the state machines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wire {
    /// Model-bearing message size including the routing header.
    pub model_bits: u64,
    pub control_bits: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    /// A satellite asks the PS for the global model of an epoch.
    Request,
    GlobalModel,
    PartialUpdate,
    WaitHint,
    ReconnectHint,
    Ack,
}

/// Sink stamp carried in the routing header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinkField {
    Node(NodeId),
    /// The aggregate is travelling along the ring towards a node that can reach the PS.
    Fallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub kind: MessageKind,
    pub epoch: u64,
    pub sink: Option<SinkField>,
    /// Satellite that received the global model from the PS for this plane.
    pub origin: Option<NodeId>,
    pub payload: Option<ModelParams>,
    pub size_bits: u64,
}

impl Message {
    pub fn global_model(epoch: u64, sink: Option<SinkField>, origin: Option<NodeId>, params: ModelParams, wire: &Wire) -> Self {
        Self { kind: MessageKind::GlobalModel, epoch, sink, origin, payload: Some(params), size_bits: wire.model_bits }
    }

    pub fn partial_update(epoch: u64, sink: Option<SinkField>, params: ModelParams, wire: &Wire) -> Self {
        Self { kind: MessageKind::PartialUpdate, epoch, sink, origin: None, payload: Some(params), size_bits: wire.model_bits }
    }

    pub fn control(kind: MessageKind, epoch: u64, wire: &Wire) -> Self {
        debug_assert!(!matches!(kind, MessageKind::GlobalModel | MessageKind::PartialUpdate));
        Self { kind, epoch, sink: None, origin: None, payload: None, size_bits: wire.control_bits }
    }

    pub fn is_model_bearing(&self) -> bool {
        matches!(self.kind, MessageKind::GlobalModel | MessageKind::PartialUpdate)
    }

    pub fn is_fallback(&self) -> bool {
        self.kind == MessageKind::PartialUpdate && self.sink == Some(SinkField::Fallback)
    }
}
