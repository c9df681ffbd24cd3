use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn triproj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_triproj")).args(args).output().expect("binary runs")
}

fn records(dir: &Path) -> Vec<Value> {
    fs::read_to_string(dir.join("report.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).expect("each line is JSON"))
        .collect()
}

fn of_kind<'a>(recs: &'a [Value], kind: &str) -> Vec<&'a Value> {
    recs.iter().filter(|r| r["record"] == kind).collect()
}

#[test]
fn zero_reserve_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = triproj(&["--stages", "1", "--reserve", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("reserve"));
    assert!(!dir.path().join("report.jsonl").exists());
}

#[test]
fn negative_stage_count_names_the_field() {
    let out = triproj(&["--stages", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stages"));
}

#[test]
fn small_cap_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "stages = 1\ndimension_cap = 100\n").unwrap();
    let out = triproj(&["--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("dimension_cap") && err.contains("174"), "{err}");
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = triproj(&["--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn one_stage_run_certifies_everything_but_word_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let out = triproj(&["--stages", "1", "--emit-trajectory", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let recs = records(dir.path());
    let failing: Vec<&str> =
        recs.iter().filter(|r| r["pass"] == false).map(|r| r["record"].as_str().unwrap()).collect();
    assert_eq!(failing, vec!["fidelity"]);
    assert_eq!(of_kind(&recs, "fidelity")[0]["status"], "too_long");
    assert_eq!(of_kind(&recs, "chain_residual").len(), 2);
    assert_eq!(of_kind(&recs, "stage_distance").len(), 3);
    assert_eq!(of_kind(&recs, "interp_level").len(), 81);
    assert_eq!(of_kind(&recs, "plan")[0]["total_dim"], 174);
    let summary = recs.last().unwrap();
    assert_eq!(summary["record"], "summary");
    assert_eq!(summary["exit_code"], 1);

    let table = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("step,generator,norm,dist_to_target"));
    let norms: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(norms.len(), 81);
    assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = triproj(&["--stages", "1", "--emit-trajectory", "--quiet", "--out", d.path().to_str().unwrap()]);
        assert!(out.stdout.is_empty());
    }
    for f in ["report.jsonl", "trajectory.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn two_stages_fail_in_construction() {
    let dir = tempfile::tempdir().unwrap();
    let out = triproj(&["--stages", "2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let recs = records(dir.path());
    let failure = of_kind(&recs, "construction");
    assert_eq!(failure.len(), 1);
    assert!(failure[0]["error"].as_str().unwrap().contains("ratchet angle"));
}

#[test]
fn trajectory_only_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let out = triproj(&["--stages", "1", "--quiet", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join("report.jsonl").exists());
    assert!(!dir.path().join("trajectory.csv").exists());
}
