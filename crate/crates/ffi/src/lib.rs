//! C ABI over the `orbitfl` simulator.
//!
//! Handles are opaque and owned by the caller, who frees them with the
//! matching `*_free`. Every fallible call returns an [`OrbitflStatus`]; on
//! failure [`orbitfl_last_error_message`] describes the cause for the
//! calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use orbitfl::cli::{csv, emit_canonical, parse_config_str};
use orbitfl::sim::{run_scenario, MetricsRecord, ProtocolKind, RunResult, Scenario, ScenarioConfig, SimError};

/// Result of every fallible call. Values 1 to 3 match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitflStatus {
    Ok = 0,
    ConfigError = 1,
    RuntimeError = 2,
    Deadlock = 3,
    NullPointer = 4,
    InvalidUtf8 = 5,
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitflProtocol {
    FedIsl = 0,
    FedNonIsl = 1,
}

/// One evaluation point; traffic fields are cumulative.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitflRecord {
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

impl From<&MetricsRecord> for OrbitflRecord {
    fn from(r: &MetricsRecord) -> Self {
        Self {
            sim_time_s: r.sim_time_s,
            epoch: r.epoch,
            test_accuracy: r.test_accuracy,
            test_loss: r.test_loss,
            ps_down_msgs: r.ps_down_msgs,
            ps_down_bits: r.ps_down_bits,
            ps_up_msgs: r.ps_up_msgs,
            ps_up_bits: r.ps_up_bits,
            isl_msgs: r.isl_msgs,
            isl_bits: r.isl_bits,
            fallback_hops: r.fallback_hops,
            epoch_duration_s: r.epoch_duration_s,
        }
    }
}

/// A validated scenario configuration.
pub struct OrbitflScenario {
    config: ScenarioConfig,
}

/// The outcome of one simulation.
pub struct OrbitflRun {
    result: RunResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(OrbitflStatus, String);

impl From<SimError> for Fail {
    fn from(e: SimError) -> Self {
        let status = match e {
            SimError::Config(_) => OrbitflStatus::ConfigError,
            SimError::Runtime(_) => OrbitflStatus::RuntimeError,
            SimError::Deadlock { .. } => OrbitflStatus::Deadlock,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(OrbitflStatus::NullPointer, format!("{what} is null"))
}

// Runs `f` behind a panic guard and records any failure for the thread.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> OrbitflStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            OrbitflStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {msg}"));
            OrbitflStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Fail(OrbitflStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

fn validated(config: ScenarioConfig) -> Result<OrbitflScenario, Fail> {
    config.validate().map_err(|e| Fail(OrbitflStatus::ConfigError, format!("{}: {}", e.key, e.message)))?;
    Ok(OrbitflScenario { config })
}

/// Thread-local description of the last failure; empty after a success.
/// Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn orbitfl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn orbitfl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Reference scenario with the given seed.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn orbitfl_scenario_new(seed: u64, out: *mut *mut OrbitflScenario) -> OrbitflStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, validated(ScenarioConfig::with_seed(seed))?);
        Ok(())
    })
}

/// Scenario from TOML text; omitted keys take reference values.
///
/// # Safety
/// `toml` must be null or a nul-terminated string; `out` as for
/// [`orbitfl_scenario_new`].
#[no_mangle]
pub unsafe extern "C" fn orbitfl_scenario_from_toml(toml: *const c_char, out: *mut *mut OrbitflScenario) -> OrbitflStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = parse_config_str(text(toml, "toml")?).map_err(|e| Fail(OrbitflStatus::ConfigError, e.to_string()))?;
        put(out, OrbitflScenario { config });
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn orbitfl_scenario_set_protocol(scenario: *mut OrbitflScenario, protocol: OrbitflProtocol) -> OrbitflStatus {
    guard(|| {
        let s = scenario.as_mut().ok_or_else(|| null("scenario"))?;
        s.config.protocol.kind = match protocol {
            OrbitflProtocol::FedIsl => ProtocolKind::FedIsl,
            OrbitflProtocol::FedNonIsl => ProtocolKind::FedNonIsl,
        };
        Ok(())
    })
}

/// Caps the number of epochs; zero is rejected.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn orbitfl_scenario_set_max_epochs(scenario: *mut OrbitflScenario, epochs: u64) -> OrbitflStatus {
    guard(|| {
        let s = scenario.as_mut().ok_or_else(|| null("scenario"))?;
        let mut c = s.config.clone();
        c.sim.max_epochs = epochs;
        *s = validated(c)?;
        Ok(())
    })
}

/// Canonical TOML of the scenario, to be released with [`orbitfl_string_free`].
///
/// # Safety
/// `scenario` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn orbitfl_scenario_to_toml(scenario: *const OrbitflScenario, out: *mut *mut c_char) -> OrbitflStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = CString::new(emit_canonical(&s.config)).expect("TOML has no nul").into_raw();
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn orbitfl_scenario_free(scenario: *mut OrbitflScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Simulates the scenario to completion.
///
/// # Safety
/// `scenario` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn orbitfl_run(scenario: *const OrbitflScenario, out: *mut *mut OrbitflRun) -> OrbitflStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let result = run_scenario(&Scenario::from_config(&s.config)?)?;
        put(out, OrbitflRun { result });
        Ok(())
    })
}

/// Number of records (one per completed epoch); zero for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn orbitfl_run_record_count(run: *const OrbitflRun) -> usize {
    run.as_ref().map_or(0, |r| r.result.records.len())
}

/// # Safety
/// `run` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn orbitfl_run_record(run: *const OrbitflRun, index: usize, out: *mut OrbitflRecord) -> OrbitflStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let n = r.result.records.len();
        let rec = r.result.records.get(index).ok_or_else(|| Fail(OrbitflStatus::OutOfRange, format!("index {index} of {n} records")))?;
        *out = rec.into();
        Ok(())
    })
}

/// Simulated time at which the run stopped; NaN for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn orbitfl_run_end_time_s(run: *const OrbitflRun) -> f64 {
    run.as_ref().map_or(f64::NAN, |r| r.result.end_time_s)
}

/// Writes the metrics CSV, led by a `# seed=<n>` line.
///
/// # Safety
/// `run` must be null or a live handle; `path` null or nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn orbitfl_run_write_csv(run: *const OrbitflRun, path: *const c_char) -> OrbitflStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        let path = text(path, "path")?;
        let mut buf = Vec::new();
        csv::write_metrics_with_seed(&mut buf, r.result.seed, &r.result.records)
            .and_then(|()| std::fs::write(path, buf))
            .map_err(|e| Fail(OrbitflStatus::RuntimeError, format!("{path}: {e}")))
    })
}

/// # Safety
/// `run` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn orbitfl_run_free(run: *mut OrbitflRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string obtained from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn orbitfl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
