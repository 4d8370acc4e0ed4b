//! Deterministic discrete-event simulation of a training run.
//!
//! Events are processed in `(time, class, sequence)` order on a single
//! thread; every aggregation sums in ascending node order, so a scenario and
//! seed fully determine the output.

pub mod config;
mod engine;
mod scenario;

pub use config::{ConfigError, ProtocolKind, ScenarioConfig};
pub use engine::{run_scenario, RunResult, StopReason};
pub use scenario::{build_constellation, build_link, Scenario};

use thiserror::Error;

use crate::learning::Evaluation;
use crate::orbital::{next_contact, ContactSearch, ContactWindow, NodeId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("deadlock at t = {time_s:.1} s in epoch {epoch}: {detail}")]
    Deadlock { time_s: f64, epoch: u64, detail: String },
    #[error("runtime error: {0}")]
    Runtime(String),
}

/// Cumulative traffic and bookkeeping counters.
///
/// `ps_*` and `isl_*` count model-bearing messages only; control messages
/// are tallied separately.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrafficCounters {
    pub ps_down_msgs: u64,
    pub ps_down_bits: u64,
    pub ps_up_msgs: u64,
    pub ps_up_bits: u64,
    pub isl_msgs: u64,
    pub isl_bits: u64,
    pub fallback_hops: u64,
    pub control_msgs: u64,
    pub control_bits: u64,
    pub model_sent: u64,
    pub model_delivered: u64,
    pub model_dropped: u64,
    pub duplicates: u64,
    pub protocol_errors: u64,
    pub connection_failures: u64,
}

impl TrafficCounters {
    /// Model-bearing messages still travelling when the run stopped.
    pub fn model_in_flight(&self) -> u64 {
        self.model_sent - self.model_delivered - self.model_dropped
    }
}

/// State of the run at one evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub sim_time_s: f64,
    pub epoch: u64,
    pub test_accuracy: f64,
    pub test_loss: f64,
    pub ps_down_msgs: u64,
    pub ps_down_bits: u64,
    pub ps_up_msgs: u64,
    pub ps_up_bits: u64,
    pub isl_msgs: u64,
    pub isl_bits: u64,
    pub fallback_hops: u64,
    pub epoch_duration_s: f64,
}

impl MetricsRecord {
    fn new(sim_time_s: f64, epoch: u64, ev: Evaluation, c: &TrafficCounters, epoch_duration_s: f64) -> Self {
        Self {
            sim_time_s,
            epoch,
            test_accuracy: ev.accuracy,
            test_loss: ev.loss,
            ps_down_msgs: c.ps_down_msgs,
            ps_down_bits: c.ps_down_bits,
            ps_up_msgs: c.ps_up_msgs,
            ps_up_bits: c.ps_up_bits,
            isl_msgs: c.isl_msgs,
            isl_bits: c.isl_bits,
            fallback_hops: c.fallback_hops,
            epoch_duration_s,
        }
    }
}

/// All PS contact windows of every satellite in `[from_t, from_t + horizon_s]`,
/// grouped by satellite in ascending id and sorted by start time.
pub fn contact_table(scenario: &Scenario, from_t: f64, horizon_s: f64) -> Vec<ContactWindow> {
    let c = &scenario.constellation;
    let end = from_t + horizon_s;
    let tol = ContactSearch::default().tolerance_s;
    let mut out = Vec::new();
    for sat in c.satellites() {
        let mut t = from_t;
        while t < end {
            let Some(w) = next_contact(c, sat, NodeId::PS, t, end - t) else { break };
            t = w.end_s + tol;
            out.push(w);
        }
    }
    out
}

/// How the accuracy target of [`compare`] is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Absolute(f64),
    /// Fraction of the best accuracy the second run reaches.
    FractionOfPlateau(f64),
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub a: RunResult,
    pub b: RunResult,
    pub target_accuracy: f64,
    pub time_a_s: Option<f64>,
    pub time_b_s: Option<f64>,
    /// `time_a / time_b`; `None` when either run misses the target.
    pub speedup: Option<f64>,
    /// PS model messages per epoch of `a` over those of `b`.
    pub traffic_ratio: Option<f64>,
    /// Mean epoch duration of `a` over that of `b`, over the first five epochs.
    pub epoch_duration_ratio: Option<f64>,
}

/// Runs both scenarios (in parallel) and relates their time-to-accuracy and PS traffic.
pub fn compare(a: &Scenario, b: &Scenario, target: Target) -> Result<Comparison, SimError> {
    let (ra, rb) = std::thread::scope(|s| {
        let ha = s.spawn(|| run_scenario(a));
        let rb = run_scenario(b);
        (ha.join().expect("simulation thread panicked"), rb)
    });
    let (ra, rb) = (ra?, rb?);
    let target_accuracy = match target {
        Target::Absolute(x) => x,
        Target::FractionOfPlateau(f) => f * rb.plateau_accuracy(),
    };
    let time_a_s = ra.time_to_accuracy(target_accuracy);
    let time_b_s = rb.time_to_accuracy(target_accuracy);
    let speedup = match (time_a_s, time_b_s) {
        (Some(x), Some(y)) if y > 0.0 => Some(x / y),
        (Some(0.0), Some(_)) => Some(1.0),
        _ => None,
    };
    let traffic_ratio = match (ra.ps_model_messages_per_epoch(), rb.ps_model_messages_per_epoch()) {
        (Some(x), Some(y)) if y > 0.0 => Some(x / y),
        _ => None,
    };
    let epoch_duration_ratio = match (ra.mean_epoch_duration(5), rb.mean_epoch_duration(5)) {
        (Some(x), Some(y)) if y > 0.0 => Some(x / y),
        _ => None,
    };
    Ok(Comparison { a: ra, b: rb, target_accuracy, time_a_s, time_b_s, speedup, traffic_ratio, epoch_duration_ratio })
}
