use std::collections::{BTreeMap, BTreeSet};

use crate::learning::{global_aggregate, ModelParams};
use crate::orbital::NodeId;

use super::{Message, MessageKind, ProtocolError, Wire};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsPhase {
    Distribution,
    Aggregation,
}

/// What the PS does with an incoming connection.
#[derive(Debug, Clone, PartialEq)]
pub enum PsDecision {
    /// Transmit the global model; the plane stays in flight until
    /// [`FedIslPs::confirm_delivery`] or [`FedIslPs::abort_delivery`].
    SendModel(Message),
    /// Receive the update; the caller commits it with [`FedIslPs::complete_update`].
    AcceptUpdate { plane: usize },
    Reply(Message),
    Terminate(ProtocolError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum UpdateOutcome {
    Stored,
    /// All planes reported; `global` is the model of the next epoch.
    EpochCompleted { finished_epoch: u64, global: ModelParams },
}

/// FedISL parameter server: one model download and one aggregate upload per plane and epoch.
#[derive(Debug, Clone)]
pub struct FedIslPs {
    epoch: u64,
    phase: PsPhase,
    num_planes: usize,
    sent: BTreeSet<usize>,
    in_flight: BTreeSet<usize>,
    received: BTreeMap<usize, ModelParams>,
    global: ModelParams,
    total_samples: usize,
    wire: Wire,
}

impl FedIslPs {
    /// Starts epoch 1 in the distribution phase with `initial` as the global model.
    pub fn new(num_planes: usize, initial: ModelParams, total_samples: usize, wire: Wire) -> Self {
        Self {
            epoch: 1,
            phase: PsPhase::Distribution,
            num_planes,
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

    pub fn phase(&self) -> PsPhase {
        self.phase
    }

    pub fn global(&self) -> &ModelParams {
        &self.global
    }

    pub fn sent_planes(&self) -> &BTreeSet<usize> {
        &self.sent
    }

    pub fn received_planes(&self) -> impl Iterator<Item = usize> + '_ {
        self.received.keys().copied()
    }

    pub fn is_in_flight(&self, plane: usize) -> bool {
        self.in_flight.contains(&plane)
    }

    /// Handles a connection opened by a satellite of `plane` (`None` if the
    /// sender is not a known satellite).
    pub fn handle_connection(&mut self, from: NodeId, plane: Option<usize>, msg: &Message) -> PsDecision {
        let Some(plane) = plane.filter(|&p| p < self.num_planes) else {
            return PsDecision::Terminate(ProtocolError::UnknownNode(from));
        };
        if msg.epoch < self.epoch {
            return PsDecision::Terminate(ProtocolError::EpochMismatch { expected: self.epoch, found: msg.epoch });
        }
        let control = |kind| PsDecision::Reply(Message::control(kind, self.epoch, &self.wire));
        match msg.kind {
            MessageKind::Request => {
                if msg.epoch > self.epoch {
                    return control(MessageKind::ReconnectHint);
                }
                match self.phase {
                    PsPhase::Aggregation => control(MessageKind::WaitHint),
                    PsPhase::Distribution if self.in_flight.contains(&plane) => control(MessageKind::ReconnectHint),
                    PsPhase::Distribution if self.sent.contains(&plane) => control(MessageKind::WaitHint),
                    PsPhase::Distribution => {
                        self.in_flight.insert(plane);
                        PsDecision::SendModel(Message::global_model(
                            self.epoch,
                            None,
                            Some(from),
                            self.global.clone(),
                            &self.wire,
                        ))
                    }
                }
            }
            MessageKind::PartialUpdate => {
                if msg.epoch != self.epoch {
                    return PsDecision::Terminate(ProtocolError::EpochMismatch {
                        expected: self.epoch,
                        found: msg.epoch,
                    });
                }
                match self.phase {
                    PsPhase::Distribution => control(MessageKind::ReconnectHint),
                    PsPhase::Aggregation if self.received.contains_key(&plane) => {
                        PsDecision::Terminate(ProtocolError::DuplicateUpdate { plane })
                    }
                    PsPhase::Aggregation if msg.payload.is_none() => PsDecision::Terminate(ProtocolError::MissingPayload),
                    PsPhase::Aggregation => PsDecision::AcceptUpdate { plane },
                }
            }
            kind => PsDecision::Terminate(ProtocolError::UnexpectedMessage { kind }),
        }
    }

    /// The model download to `plane` was received; the last confirmation starts aggregation.
    pub fn confirm_delivery(&mut self, plane: usize) {
        if self.in_flight.remove(&plane) {
            self.sent.insert(plane);
            if self.sent.len() == self.num_planes {
                self.phase = PsPhase::Aggregation;
            }
        }
    }

    pub fn abort_delivery(&mut self, plane: usize) {
        self.in_flight.remove(&plane);
    }

    /// Stores an accepted plane aggregate; the last one closes the epoch.
    pub fn complete_update(&mut self, plane: usize, msg: Message) -> Result<UpdateOutcome, ProtocolError> {
        if self.phase != PsPhase::Aggregation || msg.epoch != self.epoch {
            return Err(ProtocolError::EpochMismatch { expected: self.epoch, found: msg.epoch });
        }
        if self.received.contains_key(&plane) {
            return Err(ProtocolError::DuplicateUpdate { plane });
        }
        let partial = msg.payload.ok_or(ProtocolError::MissingPayload)?;
        self.global.check_dim(partial.dimension())?;
        self.received.insert(plane, partial);
        if self.received.len() < self.num_planes {
            return Ok(UpdateOutcome::Stored);
        }
        // BTreeMap iteration gives the canonical ascending-plane summation order.
        let partials: Vec<ModelParams> = std::mem::take(&mut self.received).into_values().collect();
        self.global = global_aggregate(&partials, self.total_samples)?;
        let finished_epoch = self.epoch;
        self.epoch += 1;
        self.phase = PsPhase::Distribution;
        self.sent.clear();
        self.in_flight.clear();
        Ok(UpdateOutcome::EpochCompleted { finished_epoch, global: self.global.clone() })
    }
}
