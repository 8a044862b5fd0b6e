use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn spikecov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spikecov")).args(args).output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn manifest_lists(dir: &Path, command: &str, file: &str) {
    let m = json(&dir.join("manifest.json"));
    assert_eq!(m["command"], command);
    let outputs = m["outputs"].as_array().unwrap();
    assert!(outputs.iter().any(|o| o.as_str().unwrap().ends_with(file)), "{outputs:?}");
}

#[test]
fn estimate_shrinkage_on_challenge_preset() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = spikecov(&["estimate", "--scenario", "challenge-synthetic", "--n", "1024", "--out-dir", out]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["gamma"], 0.5);
    assert!(summary["spike_count"].as_u64().unwrap() <= 51);
    assert!(dir.path().join("estimate.bin").exists());
    manifest_lists(dir.path(), "estimate", "summary.json");
}

#[test]
fn rcml_uses_the_requested_rank() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = spikecov(&["estimate", "--estimator", "rcml", "--rank", "25", "--out-dir", out]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["spike_count"], 25);
    assert_eq!(summary["spiked_eigenvalues"].as_array().unwrap().len(), 25);
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("absent.json");
    let run = spikecov(&["estimate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn too_few_samples_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let run = spikecov(&["estimate", "--scenario", "noise-64", "--n", "10", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn doppler_sweep_has_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = spikecov(&[
        "sweep", "--scenario", "ridge-128", "--axis", "doppler", "--doppler-grid", "50", "--angle-grid", "9",
        "--trials", "2", "--out-dir", out,
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(dir.path().join("sweep_doppler.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("doppler,gamma,rho_shrinkage"));
    assert!(header.contains("rho_rcml"));
    assert_eq!(lines.count(), 50);
    manifest_lists(dir.path(), "sweep", "sweep_doppler.csv");
}

#[test]
fn snr_sweep_lists_each_false_alarm_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = spikecov(&[
        "sweep", "--scenario", "noise-64", "--axis", "snr", "--pfa", "1e-3,1e-2,1e-1", "--snr-db", "-10,10,30",
        "--trials", "20", "--n", "128", "--out-dir", out,
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(dir.path().join("sweep_snr.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 9);
    for pfa in ["0.001", "0.01", "0.1"] {
        assert_eq!(rows.iter().filter(|r| r.split(',').nth(1) == Some(pfa)).count(), 3);
    }
}

#[test]
fn detect_warns_on_rank_zero_with_clutter() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = spikecov(&["detect", "--scenario", "ridge-128", "--rank", "0", "--out-dir", out]);
    assert!(run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("rank 0"));
    let report = json(&dir.path().join("detection.json"));
    assert_eq!(report["reports"][0]["rank"], 0);
    manifest_lists(dir.path(), "detect", "detection.json");
}

#[test]
fn strong_target_is_detected() {
    let mut hits = 0;
    for trial in 0..20 {
        let dir = tempfile::tempdir().unwrap();
        let t = trial.to_string();
        let run = spikecov(&[
            "detect", "--scenario", "noise-64", "--n", "256", "--snr-db", "30", "--pfa", "1e-3", "--trial", &t,
            "--out-dir", dir.path().to_str().unwrap(),
        ]);
        assert!(run.status.success());
        hits += usize::from(json(&dir.path().join("detection.json"))["reports"][0]["decision"] == true);
    }
    assert_eq!(hits, 20);
}

#[test]
fn clt_report_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = spikecov(&["verify-clt", "--spikes", "6", "--gamma", "0.5", "--p", "40", "--trials", "50", "--out-dir", out]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report = json(&dir.path().join("clt.json"));
    assert_eq!(report["n"], 80);
    assert_eq!(report["spikes"].as_array().unwrap().len(), 1);
    manifest_lists(dir.path(), "verify-clt", "clt.json");
}

#[test]
fn bench_writes_scaling_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = spikecov(&["bench", "--p", "16,32", "--reps", "1", "--out-dir", out]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
}
