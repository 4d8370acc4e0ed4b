use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use orbitfl_ffi::*;

const SMALL: &str = "[sim]\nseed = 3\nmax_epochs = 2\n\n[data]\nsamples_per_satellite = 20\ntest_samples = 200\n";

fn last_error() -> String {
    unsafe { CStr::from_ptr(orbitfl_last_error_message()) }.to_str().unwrap().to_string()
}

fn scenario(toml: &str) -> *mut OrbitflScenario {
    let text = CString::new(toml).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { orbitfl_scenario_from_toml(text.as_ptr(), &mut s) }, OrbitflStatus::Ok, "{}", last_error());
    s
}

fn run(s: *const OrbitflScenario) -> *mut OrbitflRun {
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { orbitfl_run(s, &mut r) }, OrbitflStatus::Ok, "{}", last_error());
    r
}

fn records(r: *const OrbitflRun) -> Vec<OrbitflRecord> {
    let n = unsafe { orbitfl_run_record_count(r) };
    (0..n)
        .map(|i| {
            let mut rec = std::mem::MaybeUninit::uninit();
            assert_eq!(unsafe { orbitfl_run_record(r, i, rec.as_mut_ptr()) }, OrbitflStatus::Ok);
            unsafe { rec.assume_init() }
        })
        .collect()
}

#[test]
fn runs_match_the_library() {
    let s = scenario(SMALL);
    let r = run(s);
    let got = records(r);
    let config = orbitfl::cli::parse_config_str(SMALL).unwrap();
    let want = orbitfl::sim::run_scenario(&orbitfl::sim::Scenario::from_config(&config).unwrap()).unwrap();
    assert_eq!(got.len(), 2);
    for (g, w) in got.iter().zip(&want.records) {
        assert_eq!(*g, OrbitflRecord::from(w));
    }
    assert_eq!(unsafe { orbitfl_run_end_time_s(r) }, want.end_time_s);
    assert_eq!(last_error(), "");

    unsafe { orbitfl_scenario_set_protocol(s, OrbitflProtocol::FedNonIsl) };
    let r2 = run(s);
    let base = records(r2);
    assert_eq!(base[1].ps_up_msgs, 80);
    assert!(base[1].sim_time_s > got[1].sim_time_s);
    unsafe {
        orbitfl_run_free(r);
        orbitfl_run_free(r2);
        orbitfl_scenario_free(s);
    }
}

#[test]
fn failures_are_reported_not_raised() {
    let mut s = ptr::null_mut();
    let bad = CString::new("[sim]\nseed = 1\n[link]\nbandwidth_hz = -5.0\n").unwrap();
    assert_eq!(unsafe { orbitfl_scenario_from_toml(bad.as_ptr(), &mut s) }, OrbitflStatus::ConfigError);
    assert!(s.is_null());
    assert!(last_error().contains("link.bandwidth_hz") && last_error().contains("line 4"), "{}", last_error());

    assert_eq!(unsafe { orbitfl_scenario_from_toml(ptr::null(), &mut s) }, OrbitflStatus::NullPointer);
    let invalid = [0xffu8, 0xfe, 0];
    assert_eq!(unsafe { orbitfl_scenario_from_toml(invalid.as_ptr().cast(), &mut s) }, OrbitflStatus::InvalidUtf8);
    assert_eq!(unsafe { orbitfl_scenario_new(1, ptr::null_mut()) }, OrbitflStatus::NullPointer);
    assert_eq!(unsafe { orbitfl_run(ptr::null(), &mut ptr::null_mut()) }, OrbitflStatus::NullPointer);
    assert_eq!(unsafe { orbitfl_run_record_count(ptr::null()) }, 0);
    assert!(unsafe { orbitfl_run_end_time_s(ptr::null()) }.is_nan());

    assert_eq!(unsafe { orbitfl_scenario_new(9, &mut s) }, OrbitflStatus::Ok);
    assert_eq!(unsafe { orbitfl_scenario_set_max_epochs(s, 0) }, OrbitflStatus::ConfigError);
    assert!(last_error().contains("sim.max_epochs"), "{}", last_error());

    // an ISL-less plane geometry that cannot close its ring is a config error at run time
    let s2 = scenario("[sim]\nseed = 1\n[constellation]\nplanes = 1\nsats_per_plane = 2\naltitude_km = 300\n");
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { orbitfl_run(s2, &mut r) }, OrbitflStatus::ConfigError, "{}", last_error());
    assert!(r.is_null());
    unsafe {
        orbitfl_scenario_free(s);
        orbitfl_scenario_free(s2);
        orbitfl_scenario_free(ptr::null_mut());
        orbitfl_run_free(ptr::null_mut());
        orbitfl_string_free(ptr::null_mut());
    }
}

#[test]
fn canonical_toml_round_trips_through_the_abi() {
    let s = scenario("[sim]\nseed = 4\n[ps]\nkind = \"ground\"\n");
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { orbitfl_scenario_to_toml(s, &mut text) }, OrbitflStatus::Ok);
    let owned = unsafe { CStr::from_ptr(text) }.to_str().unwrap().to_string();
    unsafe { orbitfl_string_free(text) };
    let again = scenario(&owned);
    let mut text2 = ptr::null_mut();
    assert_eq!(unsafe { orbitfl_scenario_to_toml(again, &mut text2) }, OrbitflStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(text2) }.to_str().unwrap(), owned);
    assert!(owned.contains("kind = \"ground\""));
    unsafe {
        orbitfl_string_free(text2);
        orbitfl_scenario_free(s);
        orbitfl_scenario_free(again);
    }
}

#[test]
fn csv_export_carries_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(SMALL);
    let r = run(s);
    let path = CString::new(dir.path().join("m.csv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { orbitfl_run_write_csv(r, path.as_ptr()) }, OrbitflStatus::Ok);
    let text = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    assert!(text.starts_with(&format!("# seed=3\n{}\n", orbitfl::cli::csv::METRICS_HEADER)));
    let nowhere = CString::new(dir.path().join("no/such/dir.csv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { orbitfl_run_write_csv(r, nowhere.as_ptr()) }, OrbitflStatus::RuntimeError);
    unsafe {
        orbitfl_run_free(r);
        orbitfl_scenario_free(s);
    }
}

#[test]
fn version_is_the_crate_version() {
    assert_eq!(unsafe { CStr::from_ptr(orbitfl_version()) }.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn manifest() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

// target/<profile>/deps/<test> -> target/<profile>
fn profile_dir() -> PathBuf {
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_declares_the_whole_surface() {
    let header = std::fs::read_to_string(manifest().join("include/orbitfl.h")).unwrap();
    for name in [
        "orbitfl_last_error_message",
        "orbitfl_version",
        "orbitfl_scenario_new",
        "orbitfl_scenario_from_toml",
        "orbitfl_scenario_set_protocol",
        "orbitfl_scenario_set_max_epochs",
        "orbitfl_scenario_to_toml",
        "orbitfl_scenario_free",
        "orbitfl_run(",
        "orbitfl_run_record_count",
        "orbitfl_run_record(",
        "orbitfl_run_end_time_s",
        "orbitfl_run_write_csv",
        "orbitfl_run_free",
        "orbitfl_string_free",
        "typedef struct OrbitflScenario OrbitflScenario;",
        "typedef struct OrbitflRun OrbitflRun;",
        "ORBITFL_STATUS_DEADLOCK = 3",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let lib = profile_dir().join("liborbitfl_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(manifest().join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest().join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = dir.path().join("m.csv");
    let out = Command::new(&exe).arg(&csv).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with(env!("CARGO_PKG_VERSION")));
    assert!(std::fs::read_to_string(csv).unwrap().starts_with("# seed=3\n"));
}
