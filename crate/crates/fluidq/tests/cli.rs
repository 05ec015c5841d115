//! End-to-end tests of the `fluidq` binary: exit codes, file formats,
//! determinism, and the config-error paths.

use std::path::Path;
use std::process::{Command, Output};

fn fluidq(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fluidq"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

const VACATION_CFG: &str = r#"
[model]
jump_rate = 0.5
jump_law = { family = "exponential", rate = 1.0 }
service_rate = 1.0
vacation_mode = "direct_eta"
vacation_law = { family = "deterministic", value = 1.0 }

[run]
master_seed = 7
horizon = 2000.0
samples = 2000
warmup = 150.0
spacing = 10.0
"#;

const BREAKDOWN_CFG: &str = r#"
[model]
jump_rate = 0.5
jump_law = { family = "exponential", rate = 1.0 }
service_rate = 1.0
failure_rate = 0.2
repair_law = { family = "exponential", rate = 2.0 }
vacation_mode = "direct_eta"
vacation_law = { family = "deterministic", value = 1.0 }

[run]
master_seed = 7
horizon = 2000.0
samples = 2000
embedding_pairs = 2000
"#;

fn write_cfg(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn analyze_vacation_model_writes_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "cfg.toml", VACATION_CFG);
    let out = fluidq(&["analyze", "--config", &cfg, "--out", "res"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("res/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["seed"], 7);
    assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);
    assert!((summary["mean"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    assert!((summary["variance"].as_f64().unwrap() - (3.0 + 1.0 / 12.0)).abs() < 1e-12);
    assert!((summary["busy_mean"].as_f64().unwrap() - 3.0).abs() < 1e-12);

    let lst = std::fs::read_to_string(tmp.path().join("res/lst.csv")).unwrap();
    assert!(lst.starts_with("# config_hash="));
    assert!(lst.lines().nth(1).unwrap() == "theta,value,se");
    // p = 0 is fully analytic, so the CDF file is written too
    assert!(tmp.path().join("res/cdf.csv").exists());
}

#[test]
fn analyze_breakdown_model_uses_embedding() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "cfg.toml", BREAKDOWN_CFG);
    let out = fluidq(&["analyze", "--config", &cfg, "--out", "res"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("res/summary.json")).unwrap())
            .unwrap();
    assert!((summary["p"].as_f64().unwrap() - 0.2).abs() < 1e-12);
    assert!((summary["lambda_V"].as_f64().unwrap() - 0.4).abs() < 1e-12);
    // empirical embedding: the transform curve carries nonzero standard errors
    let any_se = summary["lst"]
        .as_array()
        .unwrap()
        .iter()
        .any(|p| p["se"].as_f64().unwrap() > 0.0);
    assert!(any_se);
    // empirical curves are never inverted
    assert!(!tmp.path().join("res/cdf.csv").exists());
}

#[test]
fn unstable_config_exits_2_naming_the_inequality() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "cfg.toml",
        &BREAKDOWN_CFG.replace("failure_rate = 0.2", "failure_rate = 1.2"),
    );
    let out = fluidq(&["analyze", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("service rate"), "{msg}");
}

#[test]
fn unknown_config_key_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "cfg.toml",
        &VACATION_CFG.replace("jump_rate = 0.5", "jump_rate = 0.5\njump_rtae = 0.1"),
    );
    let out = fluidq(&["verify", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "cfg.toml", VACATION_CFG);
    for dir in ["a", "b"] {
        let out = fluidq(&["simulate", "--config", &cfg, "--out", dir], tmp.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let events_a = std::fs::read(tmp.path().join("a/events.csv")).unwrap();
    let events_b = std::fs::read(tmp.path().join("b/events.csv")).unwrap();
    assert_eq!(events_a, events_b);
    let samples_a = std::fs::read(tmp.path().join("a/samples.csv")).unwrap();
    let samples_b = std::fs::read(tmp.path().join("b/samples.csv")).unwrap();
    assert_eq!(samples_a, samples_b);

    // a different seed gives different draws
    let out = fluidq(&["simulate", "--config", &cfg, "--seed", "8", "--out", "c"], tmp.path());
    assert!(out.status.success());
    let events_c = std::fs::read(tmp.path().join("c/events.csv")).unwrap();
    assert_ne!(events_a, events_c);

    let text = String::from_utf8(events_a).unwrap();
    assert!(text.starts_with("# config_hash="));
    assert_eq!(text.lines().nth(1).unwrap(), "time,kind,size,W_before,W_after");
    assert!(text.lines().any(|l| l.contains("vacation_trigger")));
}

#[test]
fn zero_horizon_writes_empty_logs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "cfg.toml",
        &VACATION_CFG.replace("horizon = 2000.0", "horizon = 0.0"),
    );
    let out = fluidq(&["simulate", "--config", &cfg, "--out", "res"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let events = std::fs::read_to_string(tmp.path().join("res/events.csv")).unwrap();
    assert_eq!(events.lines().count(), 2); // header line + column names only
}

#[test]
fn verify_smoke_passes_and_perturbed_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "cfg.toml", VACATION_CFG);
    let out = fluidq(
        &["verify", "--config", &cfg, "--budget", "smoke", "--out", "ok"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("ok/report.json")).unwrap())
            .unwrap();
    assert!(report["checks"].as_array().unwrap().len() >= 10);
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));

    let out = fluidq(
        &[
            "verify",
            "--config",
            &cfg,
            "--budget",
            "smoke",
            "--perturb-theory",
            "--out",
            "bad",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_rejects_bad_budget() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "cfg.toml", VACATION_CFG);
    let out = fluidq(&["verify", "--config", &cfg, "--budget", "huge"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}
