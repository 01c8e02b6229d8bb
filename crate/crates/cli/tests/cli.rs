use std::path::Path;
use std::process::{Command, Output};

fn kickrotor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kickrotor"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn small_config(dir: &Path) -> String {
    let cfg = dir.join("run.toml");
    write(
        &cfg,
        "preset = \"cesium-default\"\nK_target = 0.8\ng_override = 0.0\nn_kicks = 40\nn_trajectories = 3\nseed = 11\n",
    );
    cfg.to_str().unwrap().to_string()
}

#[test]
fn validate_warns_on_finesse_mismatch() {
    let out = kickrotor(&["validate"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("mirrors imply"), "{err}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("N_max"));
}

#[test]
fn validate_passes_with_consistent_finesse() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ok.toml");
    // 2 sqrt(1 - T) / T for T = 1e-6
    write(&cfg, "F = 1999999.9999995\n");
    let out = kickrotor(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn validate_json_report() {
    let out = kickrotor(&["validate", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["validity"]["n_max"].as_f64().unwrap() > 1e4);
    assert_eq!(v["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn bad_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    write(&cfg, "n_trajectories = 0\n");
    let out = kickrotor(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let out = kickrotor(&["validate", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out_dir = dir.path().join("out");
    let od = out_dir.to_str().unwrap();

    let sim = kickrotor(&["simulate", "--config", &cfg, "--out", od]);
    assert_eq!(sim.status.code(), Some(2), "finesse warning expected");
    assert!(out_dir.join("trajectory_002.csv").exists());
    assert!(out_dir.join("series_002.csv").exists());

    let rec = kickrotor(&["reconstruct", od, "--config", &cfg, "--out", od]);
    assert_eq!(rec.status.code(), Some(0), "{}", String::from_utf8_lossy(&rec.stderr));
    let text = std::fs::read_to_string(out_dir.join("reconstruction_000.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap() == "n,x,p,restart_flag,flagged");

    let cmp = kickrotor(&["compare", od, od, "--config", &cfg, "--out", od, "--format", "json"]);
    assert_eq!(cmp.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&cmp.stdout).unwrap();
    assert_eq!(v["summary"]["total"]["matched_fraction"], 1.0);
    assert!(out_dir.join("phase_truth.json").exists());

    let fr = kickrotor(&["first-return", od, "--out", od]);
    assert_eq!(fr.status.code(), Some(0));
    let text = std::fs::read_to_string(out_dir.join("first_return.csv")).unwrap();
    assert_eq!(text.lines().count(), 2 + 3 * 39);
}

#[test]
fn json_files_work_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let od = dir.path().join("j");
    let od = od.to_str().unwrap();
    kickrotor(&["simulate", "--config", &cfg, "--out", od, "--format", "json"]);
    let rec = kickrotor(&["reconstruct", od, "--out", od, "--format", "json"]);
    assert_eq!(rec.status.code(), Some(0));
    let cmp = kickrotor(&["compare", od, od, "--out", od]);
    assert_eq!(cmp.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&cmp.stdout).contains("matched fraction   1.000000"));
}

#[test]
fn malformed_sample_reports_its_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let od = dir.path().join("m");
    let ods = od.to_str().unwrap();
    kickrotor(&["simulate", "--config", &cfg, "--out", ods]);
    let series = od.join("series_000.csv");
    let text = std::fs::read_to_string(&series).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[4] = "2,1.2".to_string();
    write(&series, &(lines.join("\n") + "\n"));
    let out = kickrotor(&["reconstruct", series.to_str().unwrap(), "--out", ods]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("series_000.csv:5") && err.contains("n = 2"), "{err}");
}

#[test]
fn one_sample_has_no_first_return() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("series_000.csv");
    write(&series, "# {\"schema\":\"series\",\"schema_version\":1}\nn,S_over_I0\n0,0.5\n");
    let out = kickrotor(&["first-return", series.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        kickrotor(&["simulate", "--config", &cfg, "--g-override", "0.2", "--out", d.to_str().unwrap()]);
    }
    for name in ["trajectory_000.csv", "series_001.csv", "trajectory_002.csv"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap());
    }
    let c = dir.path().join("c");
    kickrotor(&["simulate", "--config", &cfg, "--g-override", "0.2", "--seed", "12", "--out", c.to_str().unwrap()]);
    assert_ne!(
        std::fs::read(a.join("trajectory_000.csv")).unwrap(),
        std::fs::read(c.join("trajectory_000.csv")).unwrap()
    );
}
