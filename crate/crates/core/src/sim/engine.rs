use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use crate::learning::{evaluate, local_gd, Evaluation, LearningError, ModelParams};
use crate::link::{transfer_breakdown, TransferTime};
use crate::orbital::{next_contact, next_window, remaining_contact_time, ContactSearch, NodeId};
use crate::protocol::{
    estimate_aggregation_time, max_adjacent_transfer_time, select_sink, FedIslPs, FedNonIslPs, Message, MessageKind,
    NonIslSat, ProtocolError, PsDecision, SatAction, SatEvent, SatState, SatelliteEnv, SinkSearch, UpdateOutcome,
};

use super::config::ProtocolKind;
use super::{MetricsRecord, Scenario, SimError, TrafficCounters};

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    EpochLimit,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub protocol: ProtocolKind,
    pub seed: u64,
    /// One record per evaluated epoch.
    pub records: Vec<MetricsRecord>,
    /// Evaluation of the initial model at t = 0.
    pub initial: Evaluation,
    /// Completion time of every finished epoch, in order.
    pub epoch_end_times: Vec<f64>,
    pub final_model: ModelParams,
    pub counters: TrafficCounters,
    pub end_time_s: f64,
    pub stop: StopReason,
}

impl RunResult {
    pub fn epochs_completed(&self) -> u64 {
        self.epoch_end_times.len() as u64
    }

    /// Mean epoch duration over the first `n` epochs (all if fewer finished).
    pub fn mean_epoch_duration(&self, n: usize) -> Option<f64> {
        let ends = &self.epoch_end_times[..n.min(self.epoch_end_times.len())];
        let last = *ends.last()?;
        Some(last / ends.len() as f64)
    }

    /// First time the global model reached `accuracy`.
    pub fn time_to_accuracy(&self, accuracy: f64) -> Option<f64> {
        if self.initial.accuracy >= accuracy {
            return Some(0.0);
        }
        self.records.iter().find(|r| r.test_accuracy >= accuracy).map(|r| r.sim_time_s)
    }

    pub fn plateau_accuracy(&self) -> f64 {
        self.records.iter().map(|r| r.test_accuracy).fold(self.initial.accuracy, f64::max)
    }

    /// Accuracy of the latest evaluation at or before `t`.
    pub fn accuracy_at(&self, t: f64) -> f64 {
        self.records.iter().take_while(|r| r.sim_time_s <= t).last().map_or(self.initial.accuracy, |r| r.test_accuracy)
    }

    /// Model-bearing PS messages (down + up) per completed epoch.
    pub fn ps_model_messages_per_epoch(&self) -> Option<f64> {
        let e = self.epochs_completed();
        (e > 0).then(|| (self.counters.ps_down_msgs + self.counters.ps_up_msgs) as f64 / e as f64)
    }
}

#[derive(Debug, Clone)]
enum EventKind {
    Sat(NodeId, SatEvent),
    /// Fires a contact watch if `at` is still the satellite's registered watch time.
    SatWatch(NodeId),
    PushWatch(NodeId),
    PsServe,
}

#[derive(Debug, Clone)]
struct Event {
    time: f64,
    // PS service runs after everything else scheduled for the same instant
    class: u8,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed: BinaryHeap pops the earliest (time, class, seq)
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.class.cmp(&self.class)).then(other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone)]
enum JobKind {
    Connect(Message),
    Push,
}

#[derive(Debug, Clone)]
struct PsJob {
    ready: f64,
    node: NodeId,
    seq: u64,
    kind: JobKind,
}

enum Machines {
    Isl { ps: FedIslPs, sats: Vec<SatState> },
    NonIsl { ps: FedNonIslPs, sats: Vec<NonIslSat> },
}

// The satellite's view of the world at the current instant.
struct Ctx<'a> {
    now: f64,
    sc: &'a Scenario,
    model_bits: u64,
}

impl SatelliteEnv for Ctx<'_> {
    fn now(&self) -> f64 {
        self.now
    }

    fn ps_visible(&self, sat: NodeId) -> bool {
        self.sc.constellation.visible(sat, NodeId::PS, self.now)
    }

    fn ps_contact_start(&self, sat: NodeId, from: f64, within: f64) -> Option<f64> {
        next_contact(&self.sc.constellation, sat, NodeId::PS, from, within).map(|w| w.start_s)
    }

    fn contact_horizon(&self) -> f64 {
        self.sc.contact_horizon_s
    }

    fn aggregation_time_estimate(&self, plane: usize) -> f64 {
        let times: Vec<f64> = self.sc.constellation.ring(plane).iter().map(|&s| self.sc.compute_time(s)).collect();
        estimate_aggregation_time(&self.sc.constellation, plane, &self.sc.link, self.model_bits, &times, self.now)
            .unwrap_or(0.0)
    }

    fn hop_time(&self, plane: usize) -> f64 {
        max_adjacent_transfer_time(&self.sc.constellation, plane, &self.sc.link, self.model_bits, self.now).unwrap_or(0.0)
    }

    fn select_sink(&self, plane: usize, at: f64) -> NodeId {
        select_sink(&self.sc.constellation, plane, at, &SinkSearch { horizon_s: self.sc.contact_horizon_s })
    }

    fn model_dimension(&self) -> usize {
        self.sc.initial_model.dimension()
    }

    fn train(&mut self, sat: NodeId, global: &ModelParams) -> Result<ModelParams, LearningError> {
        if self.sc.config.learning.timing_only {
            return Ok(global.clone());
        }
        local_gd(global, self.sc.local(sat), &self.sc.learner)
    }

    fn compute_time(&self, sat: NodeId) -> f64 {
        self.sc.compute_time(sat)
    }

    fn samples(&self, sat: NodeId) -> usize {
        self.sc.local(sat).len()
    }
}

struct Engine<'a> {
    sc: &'a Scenario,
    model_bits: u64,
    control_bits: u64,
    queue: BinaryHeap<Event>,
    seq: u64,
    now: f64,
    machines: Machines,
    jobs: Vec<PsJob>,
    ps_busy_until: f64,
    ps_serve_scheduled: bool,
    link_free: BTreeMap<(NodeId, NodeId), f64>,
    sat_watch: Vec<Option<f64>>,
    push_watch: Vec<Option<f64>>,
    counters: TrafficCounters,
    records: Vec<MetricsRecord>,
    epoch_end_times: Vec<f64>,
    stop: Option<StopReason>,
}

/// Runs `scenario` to its epoch or time limit.
pub fn run_scenario(scenario: &Scenario) -> Result<RunResult, SimError> {
    let initial = evaluate(&scenario.initial_model, &scenario.test_data).map_err(|e| SimError::Runtime(e.to_string()))?;
    let mut engine = Engine::new(scenario);
    engine.run()?;
    let final_model = match &engine.machines {
        Machines::Isl { ps, .. } => ps.global().clone(),
        Machines::NonIsl { ps, .. } => ps.global().clone(),
    };
    // the closing upload completes after the event that processed it
    let end_time_s = engine.epoch_end_times.last().map_or(engine.now, |&t| t.max(engine.now));
    Ok(RunResult {
        protocol: scenario.protocol,
        seed: scenario.seed,
        records: engine.records,
        initial,
        epoch_end_times: engine.epoch_end_times,
        final_model,
        counters: engine.counters,
        end_time_s,
        stop: engine.stop.expect("run() returns only once stopped"),
    })
}

impl<'a> Engine<'a> {
    fn new(sc: &'a Scenario) -> Self {
        let wire = sc.wire();
        let c = &sc.constellation;
        let n = c.num_satellites();
        let machines = match sc.protocol {
            ProtocolKind::FedIsl => Machines::Isl {
                ps: FedIslPs::new(c.num_planes(), sc.initial_model.clone(), sc.total_samples(), wire),
                sats: c
                    .satellites()
                    .map(|id| {
                        let plane = c.plane_of(id).expect("satellite");
                        SatState::new(id, plane, c.ring(plane), sc.protocol_params, wire)
                    })
                    .collect(),
            },
            ProtocolKind::FedNonIsl => Machines::NonIsl {
                ps: FedNonIslPs::new(c.satellites(), sc.initial_model.clone(), sc.total_samples(), wire),
                sats: c.satellites().map(|id| NonIslSat::new(id, wire, sc.protocol_params.nonisl_upload)).collect(),
            },
        };
        Self {
            sc,
            model_bits: wire.model_bits,
            control_bits: wire.control_bits,
            queue: BinaryHeap::new(),
            seq: 0,
            now: 0.0,
            machines,
            jobs: Vec::new(),
            ps_busy_until: 0.0,
            ps_serve_scheduled: false,
            link_free: BTreeMap::new(),
            sat_watch: vec![None; n + 1],
            push_watch: vec![None; n + 1],
            counters: TrafficCounters::default(),
            records: Vec::new(),
            epoch_end_times: Vec::new(),
            stop: None,
        }
    }

    fn schedule(&mut self, time: f64, kind: EventKind) {
        let class = u8::from(matches!(kind, EventKind::PsServe));
        self.seq += 1;
        self.queue.push(Event { time, class, seq: self.seq, kind });
    }

    fn run(&mut self) -> Result<(), SimError> {
        let ids: Vec<NodeId> = self.sc.constellation.satellites().collect();
        for &id in &ids {
            self.schedule(0.0, EventKind::Sat(id, SatEvent::Start));
        }
        if matches!(self.machines, Machines::NonIsl { .. }) {
            self.start_pushes();
        }
        while self.stop.is_none() {
            let Some(ev) = self.queue.pop() else {
                return Err(self.deadlock());
            };
            if ev.time > self.sc.time_limit_s {
                self.now = self.sc.time_limit_s;
                self.stop = Some(StopReason::TimeLimit);
                break;
            }
            debug_assert!(ev.time >= self.now, "event causality");
            self.now = ev.time;
            match ev.kind {
                EventKind::Sat(id, event) => self.deliver(id, event)?,
                EventKind::SatWatch(id) => {
                    if self.sat_watch[id.0 as usize] == Some(ev.time) {
                        self.sat_watch[id.0 as usize] = None;
                        self.deliver(id, SatEvent::PsContactStart)?;
                    }
                }
                EventKind::PushWatch(id) => {
                    if self.push_watch[id.0 as usize] == Some(ev.time) {
                        self.push_watch[id.0 as usize] = None;
                        self.try_push(id);
                    }
                }
                EventKind::PsServe => self.serve()?,
            }
        }
        Ok(())
    }

    fn deadlock(&self) -> SimError {
        let (epoch, detail) = match &self.machines {
            Machines::Isl { ps, sats } => {
                let stuck: Vec<String> = sats
                    .iter()
                    .filter(|s| s.epoch() <= ps.epoch())
                    .map(|s| format!("{}:{:?}", s.id().0, s.phase()))
                    .collect();
                (ps.epoch(), format!("PS in {:?}; satellites {}", ps.phase(), stuck.join(" ")))
            }
            Machines::NonIsl { ps, sats } => {
                let stuck: Vec<String> = sats
                    .iter()
                    .filter(|s| s.epoch() <= ps.epoch())
                    .map(|s| format!("{}:{:?}", s.id().0, s.phase()))
                    .collect();
                (ps.epoch(), format!("satellites {}", stuck.join(" ")))
            }
        };
        SimError::Deadlock { time_s: self.now, epoch, detail }
    }

    fn ctx(&self) -> Ctx<'a> {
        Ctx { now: self.now, sc: self.sc, model_bits: self.model_bits }
    }

    fn deliver(&mut self, id: NodeId, event: SatEvent) -> Result<(), SimError> {
        let model_bearing = match &event {
            SatEvent::IslMessage { msg, .. } | SatEvent::PsReply(msg) => msg.is_model_bearing(),
            _ => false,
        };
        let mut ctx = self.ctx();
        let idx = id.0 as usize - 1;
        let actions = match &mut self.machines {
            Machines::Isl { sats, .. } => sats[idx].step(event, &mut ctx),
            Machines::NonIsl { sats, .. } => sats[idx].step(event, &mut ctx),
        };
        if model_bearing {
            if actions.iter().any(|a| matches!(a, SatAction::DropDuplicate | SatAction::Reject(_))) {
                self.counters.model_dropped += 1;
            } else {
                self.counters.model_delivered += 1;
            }
        }
        for a in actions {
            self.apply(id, a)?;
        }
        Ok(())
    }

    fn apply(&mut self, id: NodeId, action: SatAction) -> Result<(), SimError> {
        match action {
            SatAction::SendIsl { to, msg } => self.send_isl(id, to, msg),
            SatAction::ConnectPs { msg } => self.enqueue_job(id, JobKind::Connect(msg)),
            SatAction::StartComputation { epoch, duration_s } => {
                self.schedule(self.now + duration_s, EventKind::Sat(id, SatEvent::ComputationDone { epoch }))
            }
            SatAction::ScheduleReconnect { delay_s } => {
                self.schedule(self.now + delay_s, EventKind::Sat(id, SatEvent::ReconnectTimer))
            }
            SatAction::WatchPsContact => {
                let at = self.next_contact_after(id);
                if self.sat_watch[id.0 as usize].is_none_or(|w| w < self.now || w > at) {
                    self.sat_watch[id.0 as usize] = Some(at);
                    self.schedule(at, EventKind::SatWatch(id));
                }
            }
            SatAction::DropDuplicate => self.counters.duplicates += 1,
            SatAction::Reject(_) => self.counters.protocol_errors += 1,
            SatAction::Fatal(e) => return Err(SimError::Runtime(format!("satellite {}: {e}", id.0))),
        }
        Ok(())
    }

    fn send_isl(&mut self, from: NodeId, to: NodeId, msg: Message) {
        let key = (from.min(to), from.max(to));
        let start = self.now.max(self.link_free.get(&key).copied().unwrap_or(0.0));
        let c = &self.sc.constellation;
        let d_m = c.distance_km(from, to, start).unwrap_or(f64::NAN) * 1e3;
        let Ok(tt) = transfer_breakdown(&self.sc.link, d_m, msg.size_bits as f64, c.visible(from, to, start)) else {
            self.counters.protocol_errors += 1;
            if msg.is_model_bearing() {
                self.counters.model_sent += 1;
                self.counters.model_dropped += 1;
            }
            return;
        };
        self.link_free.insert(key, start + tt.transmission_s);
        if msg.is_model_bearing() {
            self.counters.isl_msgs += 1;
            self.counters.isl_bits += msg.size_bits;
            self.counters.model_sent += 1;
            if msg.is_fallback() {
                self.counters.fallback_hops += 1;
            }
        } else {
            self.counters.control_msgs += 1;
            self.counters.control_bits += msg.size_bits;
        }
        self.schedule(start + tt.total(), EventKind::Sat(to, SatEvent::IslMessage { from, msg }));
    }

    // Start of the next PS contact of `sat` that begins after the current one (if any) ends.
    fn next_contact_after(&self, sat: NodeId) -> f64 {
        let c = &self.sc.constellation;
        let h = self.sc.contact_horizon_s;
        let search = ContactSearch::default();
        let mut from = self.now;
        if c.visible(sat, NodeId::PS, from) {
            match next_window(|t| c.visible(sat, NodeId::PS, t), from, h, &search) {
                Some((_, end)) if end < from + h => from = end + search.tolerance_s,
                _ => return from + h,
            }
        }
        match next_contact(c, sat, NodeId::PS, from, h) {
            Some(w) => w.start_s.max(from),
            None => from + h,
        }
    }

    fn enqueue_job(&mut self, node: NodeId, kind: JobKind) {
        self.seq += 1;
        self.jobs.push(PsJob { ready: self.now, node, seq: self.seq, kind });
        if !self.ps_serve_scheduled {
            self.ps_serve_scheduled = true;
            self.schedule(self.now.max(self.ps_busy_until), EventKind::PsServe);
        }
    }

    fn transfer(&self, sat: NodeId, bits: u64, t: f64) -> Option<TransferTime> {
        let c = &self.sc.constellation;
        let d_m = c.distance_km(sat, NodeId::PS, t).ok()? * 1e3;
        transfer_breakdown(&self.sc.link, d_m, bits as f64, c.visible(sat, NodeId::PS, t)).ok()
    }

    fn contact_suffices(&self, sat: NodeId, needed: f64) -> bool {
        let c = &self.sc.constellation;
        c.visible(sat, NodeId::PS, self.now)
            && remaining_contact_time(c, sat, NodeId::PS, self.now, needed + 1.0) >= needed
    }

    // PS: serve the oldest job (ties by node id), then reschedule while work remains.
    fn serve(&mut self) -> Result<(), SimError> {
        self.ps_serve_scheduled = false;
        // jobs queued while a connection was being handled woke us too early
        if self.now < self.ps_busy_until {
            self.ps_serve_scheduled = true;
            self.schedule(self.ps_busy_until, EventKind::PsServe);
            return Ok(());
        }
        let Some(pos) = (0..self.jobs.len()).min_by(|&a, &b| {
            let (x, y) = (&self.jobs[a], &self.jobs[b]);
            x.ready.total_cmp(&y.ready).then(x.node.cmp(&y.node)).then(x.seq.cmp(&y.seq))
        }) else {
            return Ok(());
        };
        let job = self.jobs.remove(pos);
        let busy = match job.kind {
            JobKind::Connect(msg) => self.serve_connection(job.node, msg)?,
            JobKind::Push => self.serve_push(job.node),
        };
        self.ps_busy_until = self.now + busy;
        if !self.jobs.is_empty() && !self.ps_serve_scheduled {
            self.ps_serve_scheduled = true;
            self.schedule(self.ps_busy_until, EventKind::PsServe);
        }
        Ok(())
    }

    fn fail_connection(&mut self, sat: NodeId) -> f64 {
        self.counters.connection_failures += 1;
        let retry_at = self.next_contact_after(sat);
        self.schedule(self.now, EventKind::Sat(sat, SatEvent::PsConnectionFailed { retry_at }));
        0.0
    }

    fn count_control(&mut self, n: u64) {
        self.counters.control_msgs += n;
        self.counters.control_bits += n * self.control_bits;
    }

    // A satellite-initiated connection: control handshake, then the payload
    // the PS agreed to, then an acknowledgement. Returns PS occupancy.
    fn serve_connection(&mut self, sat: NodeId, msg: Message) -> Result<f64, SimError> {
        let t0 = self.now;
        let (Some(ctl), Some(model)) = (self.transfer(sat, self.control_bits, t0), self.transfer(sat, self.model_bits, t0))
        else {
            return Ok(self.fail_connection(sat));
        };
        let plane = self.sc.constellation.plane_of(sat);
        enum Plan {
            Download(Message, Option<usize>),
            Upload(Option<usize>),
            Reply(Message),
            Terminate,
        }
        let plan = match &mut self.machines {
            Machines::Isl { ps, .. } => match ps.handle_connection(sat, plane, &msg) {
                PsDecision::SendModel(m) => Plan::Download(m, plane),
                PsDecision::AcceptUpdate { plane } => Plan::Upload(Some(plane)),
                PsDecision::Reply(m) => Plan::Reply(m),
                PsDecision::Terminate(_) => Plan::Terminate,
            },
            Machines::NonIsl { ps, .. } => match ps.check_upload(sat, &msg) {
                Ok(()) => Plan::Upload(None),
                Err(_) => Plan::Terminate,
            },
        };
        let total = match &plan {
            Plan::Download(..) | Plan::Upload(_) => ctl.total() + model.total() + ctl.total(),
            Plan::Reply(_) => 2.0 * ctl.total(),
            Plan::Terminate => ctl.total(),
        };
        if !self.contact_suffices(sat, total) {
            if let (Plan::Download(_, Some(p)), Machines::Isl { ps, .. }) = (&plan, &mut self.machines) {
                ps.abort_delivery(*p);
            }
            return Ok(self.fail_connection(sat));
        }
        match plan {
            Plan::Download(m, p) => {
                if let (Machines::Isl { ps, .. }, Some(p)) = (&mut self.machines, p) {
                    ps.confirm_delivery(p);
                }
                self.count_control(2);
                self.counters.ps_down_msgs += 1;
                self.counters.ps_down_bits += m.size_bits;
                self.counters.model_sent += 1;
                self.schedule(t0 + ctl.total() + model.total(), EventKind::Sat(sat, SatEvent::PsReply(m)));
            }
            Plan::Upload(p) => {
                self.count_control(2);
                self.counters.ps_up_msgs += 1;
                self.counters.ps_up_bits += msg.size_bits;
                self.counters.model_sent += 1;
                let received_at = t0 + ctl.total() + model.total();
                let outcome = match (&mut self.machines, p) {
                    (Machines::Isl { ps, .. }, Some(p)) => ps.complete_update(p, msg),
                    (Machines::NonIsl { ps, .. }, _) => ps.complete_upload(sat, msg),
                    _ => Err(ProtocolError::UnknownNode(sat)),
                };
                match outcome {
                    Ok(o) => {
                        self.counters.model_delivered += 1;
                        if let UpdateOutcome::EpochCompleted { finished_epoch, global } = o {
                            self.epoch_completed(finished_epoch, &global, received_at)?;
                        }
                    }
                    Err(_) => {
                        self.counters.model_dropped += 1;
                        self.counters.protocol_errors += 1;
                    }
                }
                let ack = Message::control(MessageKind::Ack, 0, &crate::protocol::Wire {
                    model_bits: self.model_bits,
                    control_bits: self.control_bits,
                });
                self.schedule(t0 + total, EventKind::Sat(sat, SatEvent::PsReply(ack)));
            }
            Plan::Reply(m) => {
                self.count_control(2);
                self.schedule(t0 + total, EventKind::Sat(sat, SatEvent::PsReply(m)));
            }
            Plan::Terminate => {
                self.count_control(1);
                self.counters.protocol_errors += 1;
                self.schedule(t0 + total, EventKind::Sat(sat, SatEvent::PsTerminated));
            }
        }
        Ok(total)
    }

    fn start_pushes(&mut self) {
        let ids: Vec<NodeId> = self.sc.constellation.satellites().collect();
        for id in ids {
            self.try_push(id);
        }
    }

    fn try_push(&mut self, sat: NodeId) {
        let Machines::NonIsl { ps, .. } = &self.machines else { return };
        if !ps.needs_push(sat) || self.jobs.iter().any(|j| j.node == sat && matches!(j.kind, JobKind::Push)) {
            return;
        }
        if self.sc.constellation.visible(sat, NodeId::PS, self.now) {
            self.enqueue_job(sat, JobKind::Push);
        } else {
            self.watch_push(sat);
        }
    }

    fn watch_push(&mut self, sat: NodeId) {
        let at = self.next_contact_after(sat);
        if self.push_watch[sat.0 as usize].is_none_or(|w| w < self.now || w > at) {
            self.push_watch[sat.0 as usize] = Some(at);
            self.schedule(at, EventKind::PushWatch(sat));
        }
    }

    // Baseline PS download to one satellite plus its acknowledgement.
    fn serve_push(&mut self, sat: NodeId) -> f64 {
        let t0 = self.now;
        let Machines::NonIsl { ps, .. } = &self.machines else { return 0.0 };
        if !ps.needs_push(sat) {
            return 0.0;
        }
        let (Some(ctl), Some(model)) = (self.transfer(sat, self.control_bits, t0), self.transfer(sat, self.model_bits, t0))
        else {
            self.watch_push(sat);
            return 0.0;
        };
        let total = model.total() + ctl.total();
        if !self.contact_suffices(sat, total) {
            self.counters.connection_failures += 1;
            self.watch_push(sat);
            return 0.0;
        }
        let Machines::NonIsl { ps, .. } = &mut self.machines else { unreachable!() };
        let m = ps.start_push(sat).expect("needs_push checked");
        ps.confirm_push(sat);
        self.count_control(1);
        self.counters.ps_down_msgs += 1;
        self.counters.ps_down_bits += m.size_bits;
        self.counters.model_sent += 1;
        self.schedule(t0 + model.total(), EventKind::Sat(sat, SatEvent::PsReply(m)));
        total
    }

    fn epoch_completed(&mut self, epoch: u64, global: &ModelParams, at: f64) -> Result<(), SimError> {
        let prev = self.epoch_end_times.last().copied().unwrap_or(0.0);
        self.epoch_end_times.push(at);
        if epoch.is_multiple_of(self.sc.eval_every) {
            let ev = evaluate(global, &self.sc.test_data).map_err(|e| SimError::Runtime(e.to_string()))?;
            self.records.push(MetricsRecord::new(at, epoch, ev, &self.counters, at - prev));
        }
        if epoch >= self.sc.max_epochs {
            self.stop = Some(StopReason::EpochLimit);
        } else if matches!(self.machines, Machines::NonIsl { .. }) {
            self.start_pushes();
        }
        Ok(())
    }
}
