use std::collections::BTreeMap;

use crate::learning::{partial_aggregate, LearningError, ModelParams};
use crate::orbital::NodeId;

use super::{
    build_routing_tree, ring_distance, Message, MessageKind, ProtocolError, ProtocolParams, RoutingTree, SinkField,
    Wire,
};

/// Predictions and local resources a satellite consults while stepping.
pub trait SatelliteEnv {
    fn now(&self) -> f64;
    fn ps_visible(&self, sat: NodeId) -> bool;
    /// Start of the first PS contact of `sat` that is open at or after `from`
    /// (`from` itself if already visible), searched `within` seconds ahead.
    fn ps_contact_start(&self, sat: NodeId, from: f64, within: f64) -> Option<f64>;
    fn contact_horizon(&self) -> f64;
    /// `T_e` of the plane evaluated now.
    fn aggregation_time_estimate(&self, plane: usize) -> f64;
    /// Worst single-hop ISL transfer time `T_c` of the plane.
    fn hop_time(&self, plane: usize) -> f64;
    fn select_sink(&self, plane: usize, at: f64) -> NodeId;
    fn model_dimension(&self) -> usize;
    fn train(&mut self, sat: NodeId, global: &ModelParams) -> Result<ModelParams, LearningError>;
    fn compute_time(&self, sat: NodeId) -> f64;
    fn samples(&self, sat: NodeId) -> usize;
}

#[derive(Debug, Clone, PartialEq)]
pub enum SatEvent {
    Start,
    PsContactStart,
    ReconnectTimer,
    PsReply(Message),
    /// The connection could not be served; the PS is usable again from `retry_at`.
    PsConnectionFailed { retry_at: f64 },
    /// The PS closed the connection without a reply.
    PsTerminated,
    IslMessage { from: NodeId, msg: Message },
    ComputationDone { epoch: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SatAction {
    SendIsl { to: NodeId, msg: Message },
    /// Open a PS connection carrying `msg` (a model request or an aggregate).
    ConnectPs { msg: Message },
    StartComputation { epoch: u64, duration_s: f64 },
    ScheduleReconnect { delay_s: f64 },
    /// Deliver [`SatEvent::PsContactStart`] when the next PS contact begins.
    WatchPsContact,
    /// The incoming message was a duplicate and has been discarded.
    DropDuplicate,
    /// The incoming message violated the protocol and has been discarded.
    Reject(ProtocolError),
    /// Local training failed; the run cannot continue.
    Fatal(ProtocolError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatPhase {
    Distribution,
    Computation,
    Aggregation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pending {
    Request,
    Delivery,
}

/// FedISL satellite.
#[derive(Debug, Clone)]
pub struct SatState {
    id: NodeId,
    plane: usize,
    ring: Vec<NodeId>,
    neighbors: Vec<NodeId>,
    params: ProtocolParams,
    wire: Wire,
    epoch: u64,
    phase: SatPhase,
    sink: Option<NodeId>,
    origin: Option<NodeId>,
    tree: Option<RoutingTree>,
    local: Option<ModelParams>,
    cache: BTreeMap<NodeId, ModelParams>,
    /// Plane aggregate waiting for PS delivery (sink or fallback relay).
    outbox: Option<Message>,
    pending: Option<Pending>,
    reconnect_pending: bool,
    wait_hinted: bool,
    blocked_until: f64,
}

impl SatState {
    /// `ring` lists the plane in ring order and must contain `id`.
    pub fn new(id: NodeId, plane: usize, ring: Vec<NodeId>, params: ProtocolParams, wire: Wire) -> Self {
        let pos = ring.iter().position(|&n| n == id).expect("satellite must be part of its ring");
        let k = ring.len();
        let mut neighbors = Vec::new();
        if k > 1 {
            neighbors.push(ring[(pos + k - 1) % k]);
            let next = ring[(pos + 1) % k];
            if !neighbors.contains(&next) {
                neighbors.push(next);
            }
        }
        Self {
            id,
            plane,
            ring,
            neighbors,
            params,
            wire,
            epoch: 1,
            phase: SatPhase::Distribution,
            sink: None,
            origin: None,
            tree: None,
            local: None,
            cache: BTreeMap::new(),
            outbox: None,
            pending: None,
            reconnect_pending: false,
            wait_hinted: false,
            blocked_until: f64::NEG_INFINITY,
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn plane(&self) -> usize {
        self.plane
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn phase(&self) -> SatPhase {
        self.phase
    }

    pub fn sink(&self) -> Option<NodeId> {
        self.sink
    }

    pub fn tree(&self) -> Option<&RoutingTree> {
        self.tree.as_ref()
    }

    pub fn cached_updates(&self) -> usize {
        self.cache.len()
    }

    pub fn has_outbox(&self) -> bool {
        self.outbox.is_some()
    }

    pub fn step(&mut self, event: SatEvent, env: &mut dyn SatelliteEnv) -> Vec<SatAction> {
        let mut out = Vec::new();
        match event {
            SatEvent::Start | SatEvent::PsContactStart => {}
            SatEvent::ReconnectTimer => self.reconnect_pending = false,
            SatEvent::PsReply(msg) => self.on_ps_reply(msg, env, &mut out),
            SatEvent::PsConnectionFailed { retry_at } => {
                self.pending = None;
                self.blocked_until = retry_at;
            }
            SatEvent::PsTerminated => match self.pending.take() {
                // the PS refused the aggregate; it is not resent
                Some(Pending::Delivery) => self.outbox = None,
                Some(Pending::Request) => self.wait_hinted = true,
                None => {}
            },
            SatEvent::IslMessage { from, msg } => self.on_isl(from, msg, env, &mut out),
            SatEvent::ComputationDone { epoch } => {
                if epoch == self.epoch && self.phase == SatPhase::Computation {
                    self.phase = SatPhase::Aggregation;
                    self.try_aggregate(env, &mut out);
                }
            }
        }
        self.pump(env, &mut out);
        out
    }

    fn ps_usable(&self, env: &dyn SatelliteEnv) -> bool {
        env.now() >= self.blocked_until && env.ps_visible(self.id)
    }

    // Opens whatever PS connection the current state calls for.
    fn pump(&mut self, env: &mut dyn SatelliteEnv, out: &mut Vec<SatAction>) {
        if self.pending.is_some() || self.reconnect_pending {
            return;
        }
        if self.outbox.is_some() {
            self.deliver_outbox(env, out);
        } else if self.phase == SatPhase::Distribution && !self.wait_hinted {
            if self.ps_usable(env) {
                self.pending = Some(Pending::Request);
                out.push(SatAction::ConnectPs { msg: Message::control(MessageKind::Request, self.epoch, &self.wire) });
            } else {
                out.push(SatAction::WatchPsContact);
            }
        }
    }

    fn own_contact_start(&self, env: &dyn SatelliteEnv, from: f64) -> Option<f64> {
        let from = from.max(self.blocked_until);
        env.ps_contact_start(self.id, from, env.contact_horizon())
    }

    // Sends the aggregate to the PS now, waits for a contact that is close,
    // or hands it towards the ring member that will reach the PS first.
    fn deliver_outbox(&mut self, env: &mut dyn SatelliteEnv, out: &mut Vec<SatAction>) {
        if self.ps_usable(env) {
            self.pending = Some(Pending::Delivery);
            out.push(SatAction::ConnectPs { msg: self.outbox.clone().expect("outbox checked") });
            return;
        }
        let now = env.now();
        let t_c = env.hop_time(self.plane);
        let grace = self.params.grace_hops * t_c;
        if self.own_contact_start(env, now).is_some_and(|s| s <= now + grace) {
            out.push(SatAction::WatchPsContact);
            return;
        }
        let k = self.ring.len();
        let me = self.ring_pos(self.id);
        let mut best: Option<(f64, usize, NodeId)> = None;
        for (j, &n) in self.ring.iter().enumerate() {
            let hops = ring_distance(me, j, k);
            let arrive = now + hops as f64 * t_c;
            let start = if n == self.id {
                self.own_contact_start(env, arrive)
            } else {
                env.ps_contact_start(n, arrive, env.contact_horizon())
            };
            let Some(start) = start else { continue };
            let key = (start.max(arrive), hops, n);
            if best.is_none_or(|b| (key.0, key.1, key.2) < b) {
                best = Some(key);
            }
        }
        match best {
            Some((_, _, target)) if target != self.id => {
                let next = self.next_hop_towards(target);
                let mut msg = self.outbox.take().expect("outbox checked");
                msg.sink = Some(SinkField::Fallback);
                out.push(SatAction::SendIsl { to: next, msg });
            }
            _ => out.push(SatAction::WatchPsContact),
        }
    }

    fn ring_pos(&self, n: NodeId) -> usize {
        self.ring.iter().position(|&x| x == n).expect("node in ring")
    }

    fn next_hop_towards(&self, target: NodeId) -> NodeId {
        let k = self.ring.len();
        let (me, t) = (self.ring_pos(self.id), self.ring_pos(target));
        let forward = (t + k - me) % k;
        let backward = (me + k - t) % k;
        let next = self.ring[(me + 1) % k];
        let prev = self.ring[(me + k - 1) % k];
        match forward.cmp(&backward) {
            std::cmp::Ordering::Less => next,
            std::cmp::Ordering::Greater => prev,
            std::cmp::Ordering::Equal => next.min(prev),
        }
    }

    fn on_ps_reply(&mut self, msg: Message, env: &mut dyn SatelliteEnv, out: &mut Vec<SatAction>) {
        let pending = self.pending.take();
        match msg.kind {
            MessageKind::GlobalModel => {
                if msg.epoch == self.epoch && self.phase == SatPhase::Distribution {
                    let t_e = env.aggregation_time_estimate(self.plane);
                    let sink = env.select_sink(self.plane, env.now() + t_e);
                    let mut msg = msg;
                    msg.sink = Some(SinkField::Node(sink));
                    msg.origin = Some(self.id);
                    self.accept_model(msg, None, env, out);
                } else {
                    out.push(SatAction::DropDuplicate);
                }
            }
            MessageKind::WaitHint => {
                if pending == Some(Pending::Request) {
                    self.wait_hinted = true;
                }
            }
            MessageKind::ReconnectHint => {
                self.reconnect_pending = true;
                out.push(SatAction::ScheduleReconnect { delay_s: self.params.reconnect_wait_s });
            }
            MessageKind::Ack => {
                if pending == Some(Pending::Delivery) {
                    self.outbox = None;
                }
            }
            kind => out.push(SatAction::Reject(ProtocolError::UnexpectedMessage { kind })),
        }
    }

    fn on_isl(&mut self, from: NodeId, msg: Message, env: &mut dyn SatelliteEnv, out: &mut Vec<SatAction>) {
        if !self.neighbors.contains(&from) {
            out.push(SatAction::Reject(ProtocolError::UnknownNode(from)));
            return;
        }
        match msg.kind {
            MessageKind::GlobalModel => {
                if msg.epoch == self.epoch && self.phase == SatPhase::Distribution {
                    match (msg.sink, msg.origin) {
                        (Some(SinkField::Node(_)), Some(_)) => self.accept_model(msg, Some(from), env, out),
                        _ => out.push(SatAction::Reject(ProtocolError::UnexpectedMessage { kind: msg.kind })),
                    }
                } else {
                    out.push(SatAction::DropDuplicate);
                }
            }
            MessageKind::PartialUpdate if msg.sink == Some(SinkField::Fallback) => {
                if self.outbox.is_some() {
                    out.push(SatAction::Reject(ProtocolError::DuplicateUpdate { plane: self.plane }));
                } else {
                    self.outbox = Some(msg);
                }
            }
            MessageKind::PartialUpdate => {
                if msg.epoch != self.epoch {
                    out.push(SatAction::Reject(ProtocolError::EpochMismatch { expected: self.epoch, found: msg.epoch }));
                    return;
                }
                let Some(payload) = msg.payload else {
                    out.push(SatAction::Reject(ProtocolError::MissingPayload));
                    return;
                };
                if payload.dimension() != env.model_dimension() {
                    out.push(SatAction::Reject(ProtocolError::Learning(LearningError::DimensionMismatch {
                        expected: env.model_dimension(),
                        found: payload.dimension(),
                    })));
                    return;
                }
                if let Some(tree) = &self.tree {
                    if !tree.children(self.id).contains(&from) {
                        out.push(SatAction::Reject(ProtocolError::NotAChild { node: self.id, from }));
                        return;
                    }
                }
                if self.cache.contains_key(&from) {
                    out.push(SatAction::Reject(ProtocolError::DuplicateUpdate { plane: self.plane }));
                    return;
                }
                self.cache.insert(from, payload);
                self.try_aggregate(env, out);
            }
            kind => out.push(SatAction::Reject(ProtocolError::UnexpectedMessage { kind })),
        }
    }

    // First receipt of the stamped global model: forward, train, start the compute timer.
    fn accept_model(&mut self, msg: Message, from: Option<NodeId>, env: &mut dyn SatelliteEnv, out: &mut Vec<SatAction>) {
        let Some(SinkField::Node(sink)) = msg.sink else { unreachable!("callers stamp the sink") };
        let origin = msg.origin.expect("callers stamp the origin");
        let tree = match build_routing_tree(self.plane, &self.ring, sink) {
            Ok(t) => t,
            Err(e) => {
                out.push(SatAction::Reject(e));
                return;
            }
        };
        // Every ring edge carries the model once: forward away from the
        // origin, and across the tie edge of an odd ring from the smaller id.
        let k = self.ring.len();
        let o = self.ring_pos(origin);
        let my_dist = ring_distance(self.ring_pos(self.id), o, k);
        for &n in &self.neighbors {
            if Some(n) == from {
                continue;
            }
            let d = ring_distance(self.ring_pos(n), o, k);
            if d > my_dist || (d == my_dist && self.id < n && k > 2) {
                out.push(SatAction::SendIsl { to: n, msg: msg.clone() });
            }
        }
        let stale: Vec<NodeId> = self.cache.keys().copied().filter(|c| !tree.children(self.id).contains(c)).collect();
        for c in stale {
            self.cache.remove(&c);
            out.push(SatAction::Reject(ProtocolError::NotAChild { node: self.id, from: c }));
        }
        self.sink = Some(sink);
        self.origin = Some(origin);
        self.tree = Some(tree);
        self.phase = SatPhase::Computation;
        let global = msg.payload.expect("global model carries parameters");
        match env.train(self.id, &global) {
            Ok(w) => self.local = Some(w),
            Err(e) => {
                out.push(SatAction::Fatal(e.into()));
                return;
            }
        }
        out.push(SatAction::StartComputation { epoch: self.epoch, duration_s: env.compute_time(self.id) });
    }

    // Fires once the own computation is done and every child has reported.
    fn try_aggregate(&mut self, env: &mut dyn SatelliteEnv, out: &mut Vec<SatAction>) {
        if self.phase != SatPhase::Aggregation {
            return;
        }
        let tree = self.tree.as_ref().expect("tree is built before computation");
        let children = tree.children(self.id).to_vec();
        if !children.iter().all(|c| self.cache.contains_key(c)) {
            return;
        }
        let incoming: Vec<ModelParams> = children.iter().map(|c| self.cache.remove(c).expect("checked")).collect();
        let local = self.local.take().expect("trained before aggregation");
        let partial = match partial_aggregate(&local, env.samples(self.id), &incoming) {
            Ok(p) => p,
            Err(e) => {
                out.push(SatAction::Fatal(e.into()));
                return;
            }
        };
        let sink = self.sink.expect("sink known");
        let msg = Message::partial_update(self.epoch, Some(SinkField::Node(sink)), partial, &self.wire);
        if sink == self.id {
            self.outbox = Some(msg);
        } else {
            let parent = tree.parent(self.id).expect("non-sink has a parent");
            out.push(SatAction::SendIsl { to: parent, msg });
        }
        self.epoch += 1;
        self.phase = SatPhase::Distribution;
        self.sink = None;
        self.origin = None;
        self.tree = None;
        self.wait_hinted = false;
    }
}
