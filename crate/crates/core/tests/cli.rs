use std::fs;
use std::path::Path;
use std::process::Command;

use skewmor::experiment::{run_pipeline, ExperimentConfig, COMPARISON_FILE, S_SINGULAR_VALUES_FILE, SUMMARY_FILE};

const BIN: &str = env!("CARGO_BIN_EXE_skewmor");

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

fn skewmor(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().unwrap()
}

const SMALL_KDV: &str = r#"{"problem": "kdv", "n": 64, "T": 0.2, "steps": 20, "r": 6, "jacobian": "user_supplied"}"#;
const SMALL_MKDV: &str = r#"{"problem": "mkdv", "L": 10, "n": 64, "T": 0.2, "steps": 20, "r": 6,
    "variant": "skew_deim", "jacobian": "user_supplied"}"#;

#[test]
fn pipeline_succeeds_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_KDV);
    let out = dir.path().join("out");
    let o = skewmor(&["pipeline", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["full.skm", "full.csv", "pod_basis.skm", "singular_values.csv", "rom.csv", COMPARISON_FILE, SUMMARY_FILE] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    assert!(out.join("rom/manifest.json").is_file());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join(SUMMARY_FILE)).unwrap()).unwrap();
    assert!(summary["max_energy_error"].as_f64().unwrap() < 1e-10);
}

#[test]
fn staged_commands_match_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_KDV);
    let staged = dir.path().join("staged");
    for stage in ["simulate", "pod", "reduce", "rom-run", "compare"] {
        let o = skewmor(&[stage, "--config", cfg.to_str().unwrap(), "--out", staged.to_str().unwrap()]);
        assert!(o.status.success(), "{stage}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let piped = dir.path().join("piped");
    let o = skewmor(&["pipeline", "--config", cfg.to_str().unwrap(), "--out", piped.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read(staged.join(COMPARISON_FILE)).unwrap(), fs::read(piped.join(COMPARISON_FILE)).unwrap());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::from_json(SMALL_MKDV).unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        cfg.out_dir = dir.path().join(format!("run{k}"));
        run_pipeline(&cfg).unwrap();
        outputs.push(cfg.out_dir.clone());
    }
    for f in [COMPARISON_FILE, "full.csv", "singular_values.csv", S_SINGULAR_VALUES_FILE] {
        assert_eq!(fs::read(outputs[0].join(f)).unwrap(), fs::read(outputs[1].join(f)).unwrap(), "{f}");
    }
}

#[test]
fn skew_deim_pipeline_writes_s_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::from_json(SMALL_MKDV).unwrap();
    cfg.out_dir = dir.path().to_path_buf();
    let outcome = run_pipeline(&cfg).unwrap();
    assert!(outcome.report.summary.max_energy_error < 1e-10);
    let text = fs::read_to_string(dir.path().join(S_SINGULAR_VALUES_FILE)).unwrap();
    assert!(text.starts_with("index,sigma"));
    assert!(text.lines().count() > 2);
    assert!(dir.path().join("rom/deim_indices.csv").is_file());
}

#[test]
fn single_step_gives_two_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::from_json(r#"{"n": 32, "T": 0.01, "steps": 1, "r": 2}"#).unwrap();
    cfg.out_dir = dir.path().to_path_buf();
    run_pipeline(&cfg).unwrap();
    let text = fs::read_to_string(dir.path().join(COMPARISON_FILE)).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "t,energy_error,l2_error,energy_full");
}

#[test]
fn bad_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let o = skewmor(&["pipeline", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let cfg = write_config(dir.path(), r#"{"n": 3}"#);
    let o = skewmor(&["pipeline", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));

    assert_eq!(skewmor(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(skewmor(&["--help"]).status.code(), Some(0));

    // pod without a stored reference trajectory
    let cfg = write_config(dir.path(), SMALL_KDV);
    let empty = dir.path().join("empty");
    let o = skewmor(&["pod", "--config", cfg.to_str().unwrap(), "--out", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn numerical_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    // rank request beyond the snapshot rank
    let cfg = write_config(dir.path(), r#"{"n": 32, "T": 0.01, "steps": 2, "r": 10}"#);
    let o = skewmor(&["pipeline", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));

    let cfg = write_config(dir.path(), r#"{"n": 32, "T": 0.5, "steps": 2, "newton_max_iter": 1, "newton_tol": 1e-15}"#);
    let o = skewmor(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}
