use std::path::Path;
use std::process::{Command, Output};

use orbitfl::cli::{emit_canonical, parse_config_str, CliError};
use orbitfl::sim::config::{DataSource, PsKind};
use orbitfl::sim::{ProtocolKind, ScenarioConfig, SimError};

fn orbitfl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbitfl")).args(args).current_dir(dir).env_remove("ORBITFL_SEED").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = "[sim]\nseed = 5\nmax_epochs = 2\n\n[data]\nsamples_per_satellite = 20\ntest_samples = 200\n";

#[test]
fn empty_link_section_takes_reference_values() {
    let c = parse_config_str("[link]\n\n[sim]\nseed = 1\n").unwrap();
    let d = ScenarioConfig::with_seed(1);
    assert_eq!(c, d);
    assert_eq!(c.link.bandwidth_hz, 20e6);
    assert_eq!(c.link.tx_power_dbm, 40.0);
    assert_eq!(c.link.tx_gain_dbi, 6.98);
    assert_eq!(c.link.carrier_hz, 2.4e9);
    assert_eq!(c.link.noise_temp_k, 354.81);
    assert_eq!(c.ps.min_elevation_deg, 10.0);
    assert_eq!(c.learning.learning_rate, 0.05);
    assert_eq!(c.learning.cycles_per_sample, 1e3);
    assert_eq!(c.learning.cpu_hz, 1e9);
    assert_eq!((c.constellation.planes, c.constellation.sats_per_plane), (5, 8));
    assert_eq!((c.constellation.altitude_km, c.constellation.inclination_deg), (2000.0, 80.0));
}

#[test]
fn errors_name_key_and_line() {
    let e = parse_config_str("[sim]\nseed = 1\n[constellation]\naltitude_km = -3.0\n").unwrap_err();
    assert_eq!((e.key.as_deref(), e.line), (Some("constellation.altitude_km"), Some(4)));

    let e = parse_config_str("[sim]\nseed = 1\n\n[ps]\nkind = \"meo\"\naltitude = 3\n").unwrap_err();
    assert_eq!((e.key.as_deref(), e.line), (Some("ps.altitude"), Some(6)));
    assert!(e.message.contains("unknown field"), "{e}");

    let e = parse_config_str("[sim]\nseed = 1\n[link]\nbandwidth_hz = \"wide\"\n").unwrap_err();
    assert_eq!((e.key.as_deref(), e.line), (Some("link.bandwidth_hz"), Some(4)));

    let e = parse_config_str("[constellation]\nplanes = 5\n").unwrap_err();
    assert_eq!((e.key.as_deref(), e.line), (Some("sim.seed"), None));

    let e = parse_config_str("[sim\nseed = 1\n").unwrap_err();
    assert_eq!(e.line, Some(1));
}

#[test]
fn canonical_form_round_trips() {
    let mut c = ScenarioConfig::with_seed(99);
    c.ps.kind = PsKind::Ground;
    c.protocol.kind = ProtocolKind::FedNonIsl;
    c.data.source = DataSource::Idx;
    c.data.synthetic_fallback = true;
    c.data.train_images = Some("a/train-images".into());
    c.data.train_labels = Some("a/train-labels".into());
    c.data.test_images = Some("a/t10k-images".into());
    c.data.test_labels = Some("a/t10k-labels".into());
    c.link.bandwidth_hz = 12_345.678_9;
    let text = emit_canonical(&c);
    assert_eq!(parse_config_str(&text).unwrap(), c);
    assert_eq!(emit_canonical(&parse_config_str(&text).unwrap()), text);
}

#[test]
fn exit_code_mapping() {
    assert_eq!(CliError::from(SimError::Config("x".into())).exit_code(), 1);
    assert_eq!(CliError::from(SimError::Runtime("x".into())).exit_code(), 2);
    assert_eq!(CliError::from(SimError::Deadlock { time_s: 1.0, epoch: 2, detail: "x".into() }).exit_code(), 3);
}

#[test]
fn validate_accepts_the_default_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let o = orbitfl(&["validate", "--seed", "1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("40 satellites in 5 planes"));
}

#[test]
fn printed_config_reloads_to_the_same_scenario() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), SMALL).unwrap();
    let o = orbitfl(&["validate", "--config", "s.toml", "--print-config", "--seed", "6"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut want = parse_config_str(SMALL).unwrap();
    want.sim.seed = Some(6);
    assert_eq!(parse_config_str(&text).unwrap(), want);
}

#[test]
fn missing_seed_and_bad_values_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = orbitfl(&["validate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sim.seed"));

    std::fs::write(dir.path().join("bad.toml"), "[sim]\nseed = 1\n\n[constellation]\naltitude_km = -1\n").unwrap();
    let o = orbitfl(&["validate", "--config", "bad.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("constellation.altitude_km") && err.contains("line 5"), "{err}");

    let o = orbitfl(&["run", "--seed", "x"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_dataset_without_fallback_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[sim]\nseed = 1\n\n[data]\nsource = \"idx\"\ntrain_images = \"nope-images\"\ntrain_labels = \"nope-labels\"\ntest_images = \"nope-t-images\"\ntest_labels = \"nope-t-labels\"\n";
    std::fs::write(dir.path().join("idx.toml"), cfg).unwrap();
    let o = orbitfl(&["run", "--config", "idx.toml", "--out", "m.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("data.train_images"), "{}", stderr(&o));
    assert!(!dir.path().join("m.csv").exists());

    let fallback = cfg.replace("source = \"idx\"", "source = \"idx\"\nsynthetic_fallback = true\nsamples_per_satellite = 10");
    std::fs::write(dir.path().join("idx.toml"), fallback).unwrap();
    let o = orbitfl(&["validate", "--config", "idx.toml"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn runs_are_byte_identical_and_seed_stamped() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), SMALL).unwrap();
    for out in ["a.csv", "b.csv"] {
        let o = orbitfl(&["run", "--config", "s.toml", "--out", out], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# seed=5");
    assert_eq!(lines[1], orbitfl::cli::csv::METRICS_HEADER);
    assert_eq!(lines.len(), 4);
    assert!(!text.contains('\r'));
}

#[test]
fn seed_precedence_is_flag_then_env_then_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), SMALL.replace("max_epochs = 2", "max_epochs = 1")).unwrap();
    let run = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_orbitfl"));
        cmd.args(["run", "--config", "s.toml", "--out", "m.csv", "--quiet"]).args(extra).current_dir(dir.path());
        match env {
            Some(v) => cmd.env("ORBITFL_SEED", v),
            None => cmd.env_remove("ORBITFL_SEED"),
        };
        let o = cmd.output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(o.stdout.is_empty());
        std::fs::read_to_string(dir.path().join("m.csv")).unwrap().lines().next().unwrap().to_string()
    };
    assert_eq!(run(&[], None), "# seed=5");
    assert_eq!(run(&[], Some("8")), "# seed=8");
    assert_eq!(run(&["--seed", "9"], Some("8")), "# seed=9");
}

#[test]
fn compare_writes_both_tables_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), SMALL).unwrap();
    let o = orbitfl(&["compare", "--config", "s.toml", "--out", "cmp"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = std::fs::read_to_string(dir.path().join("cmp/summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "speedup,traffic_ratio");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[1], "8");
    assert!(fields[0].parse::<f64>().unwrap() > 1.0);
    for f in ["fedisl.csv", "fednonisl.csv"] {
        assert!(std::fs::read_to_string(dir.path().join("cmp").join(f)).unwrap().starts_with("# seed=5\n"));
    }
}

#[test]
fn contacts_lists_irregular_ground_station_windows() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("g.toml"), "[ps]\nkind = \"ground\"\n\n[sim]\nseed = 1\n").unwrap();
    let o = orbitfl(&["contacts", "--config", "g.toml", "--out", "c.csv", "--horizon-hours", "12"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("satellite,plane,start_s,end_s,duration_s"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert!(rows.len() > 40);
    assert!(rows.iter().all(|r| r[3] > r[2] && r[2] >= 0.0 && r[3] <= 12.0 * 3600.0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains('#') && stdout.contains('.'));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), SMALL.replace("max_epochs = 2", "max_epochs = 1")).unwrap();
    let o = orbitfl(&["run", "--config", "s.toml", "--out", "missing-dir/m.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
