//! End-to-end tests of the `lyaplab` binary: config handling, exit codes,
//! output formats, and determinism.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU32, Ordering};

static COUNTER: AtomicU32 = AtomicU32::new(0);

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "lyaplab-test-{}-{}-{}",
        tag,
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::SeqCst)
    ));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lyaplab")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Fast cascade settings shared by the cv tests.
const FAST_CV: &str = "[cv]\nk_max = 160\nsteps = 60\n";

#[test]
fn print_defaults_is_valid_toml() {
    let out = run(&["print-defaults"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let parsed: toml::Value = toml::from_str(&text).expect("defaults must parse as TOML");
    assert!(parsed.get("ggs").is_some());
    assert!(parsed.get("bowen").is_some());
    assert!(parsed.get("cv").is_some());
}

#[test]
fn check_constants_passes_and_reports_indices() {
    let dir = temp_dir("constants");
    let cfg = dir.join("cfg.toml");
    fs::write(&cfg, "[cv]\nk_max = 120\n").unwrap();
    let out = run(&[
        "check-constants",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("k0=4"), "{text}");
    assert!(text.contains("horseshoe"));
    assert!(!text.contains("FAIL"));
    let json = fs::read_to_string(dir.join("cv_constants.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(parsed["schema"], "lyaplab-verdict-v1");
    assert_eq!(parsed["k0"], 4);
}

#[test]
fn broken_horseshoe_is_config_error() {
    let dir = temp_dir("horseshoe");
    let cfg = dir.join("cfg.toml");
    fs::write(&cfg, "[cv]\nlambda = 0.3\n").unwrap();
    let out = run(&[
        "cv",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("horseshoe"), "{}", stderr(&out));
}

#[test]
fn unknown_config_key_is_config_error() {
    let dir = temp_dir("badkey");
    let cfg = dir.join("cfg.toml");
    fs::write(&cfg, "[cv]\nnot_a_key = 1\n").unwrap();
    let out = run(&["cv", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cv_run_is_deterministic() {
    let cfg_dir = temp_dir("det-cfg");
    let cfg = cfg_dir.join("cfg.toml");
    fs::write(&cfg, FAST_CV).unwrap();
    let mut outputs = Vec::new();
    for tag in ["det-a", "det-b"] {
        let dir = temp_dir(tag);
        let out = run(&[
            "cv",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "--seed",
            "42",
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        let csv = fs::read(dir.join("cv_steps.csv")).unwrap();
        let verdict = fs::read(dir.join("cv_verdict.json")).unwrap();
        outputs.push((csv, verdict));
    }
    assert_eq!(outputs[0], outputs[1], "same seed must give identical outputs");
}

#[test]
fn cv_detects_oscillation() {
    let cfg_dir = temp_dir("cv-cfg");
    let cfg = cfg_dir.join("cfg.toml");
    fs::write(&cfg, FAST_CV).unwrap();
    let dir = temp_dir("cv-out");
    let out = run(&["cv", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json = fs::read_to_string(dir.join("cv_verdict.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(parsed["schema"], "lyaplab-verdict-v1");
    assert_eq!(parsed["report"]["verdict"], "irregular");
    // CSV has a header and one row per step with full-precision floats.
    let csv = fs::read_to_string(dir.join("cv_steps.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("time,exponent"));
    assert_eq!(lines.count(), 60);
    assert!(csv.contains('e'), "floats must be in scientific notation");
}

#[test]
fn degenerate_growth_is_regular_with_note() {
    let cfg_dir = temp_dir("deg-cfg");
    let cfg = cfg_dir.join("cfg.toml");
    fs::write(&cfg, "[cv]\nalpha = 1.175\nbeta = 1.175\nk_max = 160\nsteps = 60\n").unwrap();
    let dir = temp_dir("deg-out");
    let out = run(&["cv", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let json = fs::read_to_string(dir.join("cv_verdict.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!(parsed["note"].as_str().unwrap().contains("degenerate"));
    assert_eq!(parsed["report"]["verdict"], "regular");
}

#[test]
fn ggs_and_bowen_produce_series_and_verdicts() {
    let dir = temp_dir("gb");
    let out = run(&["ggs", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json = fs::read_to_string(dir.join("ggs_verdict.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(parsed["report"]["verdict"], "irregular");
    for f in [
        "ggs_generic_returns.csv",
        "ggs_horizontal_returns_odd.csv",
        "ggs_horizontal_returns_even.csv",
        "ggs_generic_intermediate.csv",
    ] {
        assert!(dir.join(f).exists(), "{f} missing");
    }

    let out = run(&["bowen", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json = fs::read_to_string(dir.join("bowen_verdict.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(parsed["report"]["verdict"], "irregular");
    assert!(dir.join("bowen_tau_plus_rho.csv").exists());
}
