//! Command-line front end: `run`, `compare`, `contacts` and `validate`.
//!
//! Human-readable progress goes to stdout; all machine data goes to the CSV
//! paths. Exit codes: 0 success, 1 configuration, 2 runtime, 3 deadlock.

mod config_file;
pub mod csv;

pub use config_file::{
    emit_canonical, load_config, parse_config_str, parse_config_unvalidated, validate_config, ConfigFileError,
};

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::orbital::ContactWindow;
use crate::sim::{compare, contact_table, run_scenario, ProtocolKind, Scenario, ScenarioConfig, SimError, Target};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Deadlock(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::Runtime(_) => 2,
            Self::Deadlock(_) => 3,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) => Self::Config(e.to_string()),
            SimError::Deadlock { .. } => Self::Deadlock(e.to_string()),
            SimError::Runtime(_) => Self::Runtime(e.to_string()),
        }
    }
}

impl From<ConfigFileError> for CliError {
    fn from(e: ConfigFileError) -> Self {
        Self::Config(format!("configuration error: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "orbitfl", version, about = "Federated learning over a LEO constellation, simulated")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Suppress progress output.
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (TOML). Defaults apply to every omitted key.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed; overrides the file.
    #[arg(long, env = "ORBITFL_SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one protocol and write per-epoch metrics.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "metrics.csv")]
        out: PathBuf,
        #[arg(long)]
        protocol: Option<ProtocolKind>,
        /// Simulated time limit.
        #[arg(long)]
        horizon_hours: Option<f64>,
    },
    /// Simulate both protocols on the same scenario and relate them.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Directory receiving fedisl.csv, fednonisl.csv and summary.csv.
        #[arg(long, default_value = "compare")]
        out: PathBuf,
        #[arg(long)]
        horizon_hours: Option<f64>,
        /// Target accuracy as a fraction of the best FedISL accuracy.
        #[arg(long, default_value_t = 0.95)]
        target_fraction: f64,
    },
    /// List PS contact windows of every satellite.
    Contacts {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "contacts.csv")]
        out: PathBuf,
        #[arg(long, default_value_t = 12.0)]
        horizon_hours: f64,
    },
    /// Check a scenario without simulating it.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Print the scenario in canonical form, every default included.
        #[arg(long)]
        print_config: bool,
    },
}

/// Parses `args` (program name first) and executes; returns the exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn scenario_config(common: &Common) -> Result<(ScenarioConfig, Option<String>), CliError> {
    let (mut config, text) = match &common.config {
        Some(path) => {
            let (c, t) = load_config(path)?;
            (c, Some(t))
        }
        None => (ScenarioConfig::default(), None),
    };
    if let Some(seed) = common.seed {
        config.sim.seed = Some(seed);
    }
    validate_config(&config, text.as_deref()).map_err(|e| ConfigFileError { path: common.config.clone(), ..e })?;
    Ok((config, text))
}

fn set_horizon(config: &mut ScenarioConfig, hours: Option<f64>) -> Result<(), CliError> {
    if let Some(h) = hours {
        if !(h.is_finite() && h > 0.0) {
            return Err(CliError::Config(format!("--horizon-hours: must be positive, got {h}")));
        }
        config.sim.time_limit_h = h;
    }
    Ok(())
}

fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
    let mut buf = Vec::new();
    f(&mut buf).and_then(|()| std::fs::write(path, buf)).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut say = |s: String| {
        if !cli.quiet {
            let _ = writeln!(stdout, "{s}");
        }
    };
    match &cli.command {
        Command::Run { common, out, protocol, horizon_hours } => {
            let (mut config, _) = scenario_config(common)?;
            if let Some(p) = protocol {
                config.protocol.kind = *p;
            }
            set_horizon(&mut config, *horizon_hours)?;
            let scenario = Scenario::from_config(&config)?;
            say(format!("running {} with seed {}", scenario.protocol, scenario.seed));
            let r = run_scenario(&scenario)?;
            write_file(out, |w| csv::write_metrics_with_seed(w, r.seed, &r.records))?;
            say(format!(
                "{} epochs in {:.1} h of simulated time ({:?}); final accuracy {:.4}",
                r.epochs_completed(),
                r.end_time_s / 3600.0,
                r.stop,
                r.records.last().map_or(r.initial.accuracy, |x| x.test_accuracy)
            ));
            say(format!("metrics written to {}", out.display()));
        }
        Command::Compare { common, out, horizon_hours, target_fraction } => {
            let (mut config, _) = scenario_config(common)?;
            set_horizon(&mut config, *horizon_hours)?;
            if !(*target_fraction > 0.0 && *target_fraction <= 1.0) {
                return Err(CliError::Config(format!("--target-fraction: must lie in (0, 1], got {target_fraction}")));
            }
            let mut non = config.clone();
            non.protocol.kind = ProtocolKind::FedNonIsl;
            let mut isl = config;
            isl.protocol.kind = ProtocolKind::FedIsl;
            let (a, b) = (Scenario::from_config(&non)?, Scenario::from_config(&isl)?);
            say(format!("comparing fednonisl against fedisl with seed {}", b.seed));
            let c = compare(&a, &b, Target::FractionOfPlateau(*target_fraction))?;
            std::fs::create_dir_all(out).map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
            write_file(&out.join("fednonisl.csv"), |w| csv::write_metrics_with_seed(w, c.a.seed, &c.a.records))?;
            write_file(&out.join("fedisl.csv"), |w| csv::write_metrics_with_seed(w, c.b.seed, &c.b.records))?;
            write_file(&out.join("summary.csv"), |w| csv::write_summary(w, &c))?;
            let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.2}"));
            say(format!("target accuracy {:.4}", c.target_accuracy));
            say(format!(
                "time to target: fednonisl {} h, fedisl {} h",
                show(c.time_a_s.map(|t| t / 3600.0)),
                show(c.time_b_s.map(|t| t / 3600.0))
            ));
            say(format!(
                "speedup {}, PS traffic ratio {}, epoch duration ratio {}",
                show(c.speedup),
                show(c.traffic_ratio),
                show(c.epoch_duration_ratio)
            ));
            say(format!("results written to {}", out.display()));
        }
        Command::Contacts { common, out, horizon_hours } => {
            let (config, _) = scenario_config(common)?;
            if !(horizon_hours.is_finite() && *horizon_hours > 0.0) {
                return Err(CliError::Config(format!("--horizon-hours: must be positive, got {horizon_hours}")));
            }
            let scenario = Scenario::from_config(&config)?;
            let horizon = horizon_hours * 3600.0;
            let windows = contact_table(&scenario, 0.0, horizon);
            write_file(out, |w| csv::write_contacts(w, &scenario.constellation, &windows))?;
            for line in timeline(&scenario, &windows, horizon) {
                say(line);
            }
            say(format!("{} windows written to {}", windows.len(), out.display()));
        }
        Command::Validate { common, print_config } => {
            let (config, _) = scenario_config(common)?;
            let scenario = Scenario::from_config(&config)?;
            if *print_config {
                let _ = write!(stdout, "{}", emit_canonical(&config));
                return Ok(());
            }
            say(format!(
                "ok: {} satellites in {} planes, {} training samples, model of {} parameters",
                scenario.constellation.num_satellites(),
                scenario.constellation.num_planes(),
                scenario.total_samples(),
                scenario.initial_model.dimension()
            ));
        }
    }
    Ok(())
}

// One row per satellite; `#` marks bins that overlap a contact window.
fn timeline(scenario: &Scenario, windows: &[ContactWindow], horizon: f64) -> Vec<String> {
    const COLS: usize = 72;
    let bin = horizon / COLS as f64;
    let mut rows = vec![format!("PS contacts over {:.1} h, one column per {:.0} min", horizon / 3600.0, bin / 60.0)];
    for sat in scenario.constellation.satellites() {
        let mut row = vec![b'.'; COLS];
        for w in windows.iter().filter(|w| w.node_a == sat) {
            let first = (w.start_s / bin).floor() as usize;
            let last = ((w.end_s / bin).ceil() as usize).min(COLS);
            row[first.min(COLS)..last].fill(b'#');
        }
        rows.push(format!("{:>4} {}", sat.0, String::from_utf8(row).expect("ascii")));
    }
    rows
}
