//! Baseline without inter-satellite links: every satellite exchanges its
//! model with the PS directly, and the PS pushes the global model to each
//! satellite during its own visibility.

use std::collections::{BTreeMap, BTreeSet};

use crate::learning::{global_aggregate, ModelParams};
use crate::orbital::NodeId;

use super::{
    Message, MessageKind, ProtocolError, SatAction, SatEvent, SatelliteEnv, UpdateOutcome, UploadTrigger, Wire,
};

/// PS side of the baseline.
#[derive(Debug, Clone)]
pub struct FedNonIslPs {
    epoch: u64,
    satellites: BTreeSet<NodeId>,
    sent: BTreeSet<NodeId>,
    in_flight: BTreeSet<NodeId>,
    received: BTreeMap<NodeId, ModelParams>,
    global: ModelParams,
    total_samples: usize,
    wire: Wire,
}

impl FedNonIslPs {
    pub fn new(satellites: impl IntoIterator<Item = NodeId>, initial: ModelParams, total_samples: usize, wire: Wire) -> Self {
        Self {
            epoch: 1,
            satellites: satellites.into_iter().collect(),
            sent: BTreeSet::new(),
            in_flight: BTreeSet::new(),
            received: BTreeMap::new(),
            global: initial,
            total_samples,
            wire,
        }
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn global(&self) -> &ModelParams {
        &self.global
    }

    /// The current epoch's model has not yet reached `sat` and is not on its way.
    pub fn needs_push(&self, sat: NodeId) -> bool {
        self.satellites.contains(&sat) && !self.sent.contains(&sat) && !self.in_flight.contains(&sat)
    }

    pub fn start_push(&mut self, sat: NodeId) -> Option<Message> {
        if !self.needs_push(sat) {
            return None;
        }
        self.in_flight.insert(sat);
        Some(Message::global_model(self.epoch, None, None, self.global.clone(), &self.wire))
    }

    pub fn confirm_push(&mut self, sat: NodeId) {
        if self.in_flight.remove(&sat) {
            self.sent.insert(sat);
        }
    }

    pub fn abort_push(&mut self, sat: NodeId) {
        self.in_flight.remove(&sat);
    }

    /// Admission check of an upload; the caller then commits it with [`Self::complete_upload`].
    pub fn check_upload(&self, from: NodeId, msg: &Message) -> Result<(), ProtocolError> {
        if !self.satellites.contains(&from) {
            return Err(ProtocolError::UnknownNode(from));
        }
        if msg.kind != MessageKind::PartialUpdate {
            return Err(ProtocolError::UnexpectedMessage { kind: msg.kind });
        }
        if msg.epoch != self.epoch || !self.sent.contains(&from) {
            return Err(ProtocolError::EpochMismatch { expected: self.epoch, found: msg.epoch });
        }
        if self.received.contains_key(&from) {
            return Err(ProtocolError::DuplicateUpdate { plane: from.0 as usize });
        }
        match &msg.payload {
            None => Err(ProtocolError::MissingPayload),
            Some(p) => Ok(self.global.check_dim(p.dimension())?),
        }
    }

    /// Stores a `D_k·w_k` upload; the last one closes the epoch.
    pub fn complete_upload(&mut self, from: NodeId, msg: Message) -> Result<UpdateOutcome, ProtocolError> {
        self.check_upload(from, &msg)?;
        self.received.insert(from, msg.payload.expect("checked"));
        if self.received.len() < self.satellites.len() {
            return Ok(UpdateOutcome::Stored);
        }
        let updates: Vec<ModelParams> = std::mem::take(&mut self.received).into_values().collect();
        self.global = global_aggregate(&updates, self.total_samples)?;
        let finished_epoch = self.epoch;
        self.epoch += 1;
        self.sent.clear();
        self.in_flight.clear();
        Ok(UpdateOutcome::EpochCompleted { finished_epoch, global: self.global.clone() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonIslPhase {
    /// Waiting for the PS to push the epoch's model.
    Idle,
    Computing,
    /// Holding the trained update until the PS is reachable.
    Ready,
}

/// Satellite side of the baseline.
#[derive(Debug, Clone)]
pub struct NonIslSat {
    id: NodeId,
    wire: Wire,
    epoch: u64,
    phase: NonIslPhase,
    local: Option<ModelParams>,
    pending: bool,
    blocked_until: f64,
    trigger: UploadTrigger,
    // a contact started since training finished
    contact_seen: bool,
}

impl NonIslSat {
    pub fn new(id: NodeId, wire: Wire, trigger: UploadTrigger) -> Self {
        Self {
            id,
            wire,
            epoch: 1,
            phase: NonIslPhase::Idle,
            local: None,
            pending: false,
            blocked_until: f64::NEG_INFINITY,
            trigger,
            contact_seen: false,
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn phase(&self) -> NonIslPhase {
        self.phase
    }

    pub fn step(&mut self, event: SatEvent, env: &mut dyn SatelliteEnv) -> Vec<SatAction> {
        let mut out = Vec::new();
        match event {
            SatEvent::PsContactStart => self.contact_seen = self.phase == NonIslPhase::Ready,
            SatEvent::Start | SatEvent::ReconnectTimer => {}
            SatEvent::PsReply(msg) => match msg.kind {
                MessageKind::GlobalModel if msg.epoch == self.epoch && self.phase == NonIslPhase::Idle => {
                    let global = msg.payload.expect("global model carries parameters");
                    match env.train(self.id, &global) {
                        Ok(w) => {
                            self.local = Some(w.scaled(env.samples(self.id) as f64));
                            self.phase = NonIslPhase::Computing;
                            out.push(SatAction::StartComputation { epoch: self.epoch, duration_s: env.compute_time(self.id) });
                        }
                        Err(e) => out.push(SatAction::Fatal(e.into())),
                    }
                }
                MessageKind::GlobalModel => out.push(SatAction::DropDuplicate),
                MessageKind::Ack if self.pending => self.finish_epoch(),
                kind => out.push(SatAction::Reject(ProtocolError::UnexpectedMessage { kind })),
            },
            SatEvent::PsConnectionFailed { retry_at } => {
                self.pending = false;
                self.blocked_until = retry_at;
            }
            SatEvent::PsTerminated => {
                if self.pending {
                    self.finish_epoch();
                }
            }
            SatEvent::IslMessage { from, .. } => out.push(SatAction::Reject(ProtocolError::UnknownNode(from))),
            SatEvent::ComputationDone { epoch } => {
                if epoch == self.epoch && self.phase == NonIslPhase::Computing {
                    self.phase = NonIslPhase::Ready;
                }
            }
        }
        if self.phase == NonIslPhase::Ready && !self.pending {
            let triggered = self.contact_seen || self.trigger == UploadTrigger::Immediate;
            if triggered && env.now() >= self.blocked_until && env.ps_visible(self.id) {
                self.pending = true;
                let update = self.local.clone().expect("trained");
                out.push(SatAction::ConnectPs { msg: Message::partial_update(self.epoch, None, update, &self.wire) });
            } else {
                out.push(SatAction::WatchPsContact);
            }
        }
        out
    }

    fn finish_epoch(&mut self) {
        self.pending = false;
        self.local = None;
        self.contact_seen = false;
        self.phase = NonIslPhase::Idle;
        self.epoch += 1;
    }
}
