use std::path::Path;
use std::process::{Command, Output};

use mcnoma::channel::{write_replay_csv, ChannelGenerator, FadingConfig, UserPlacement};
use mcnoma::config::RunConfig;

fn mcnoma(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcnoma")).args(args).current_dir(dir).output().expect("binary runs")
}

fn write_config(dir: &Path, cfg: &RunConfig) -> String {
    let path = dir.join("run.json");
    std::fs::write(&path, cfg.to_json().unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn solve_prints_identical_json_for_identical_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let a = mcnoma(&["solve", "--preset", "random-drop", "--seed", "9"], dir.path());
    let b = mcnoma(&["solve", "--preset", "random-drop", "--seed", "9"], dir.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let json: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(json["schema_version"], 1);
    let p_bars: f64 = json["p_bars"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
    assert!((p_bars - 19.952_623_149_688_8).abs() < 1e-6);
}

#[test]
fn malformed_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"schema_version": 1, "system": {"n_users": "ten"}}"#).unwrap();
    let out = mcnoma(&["solve", "--config", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    assert_eq!(mcnoma(&["solve", "--config", "missing.json"], dir.path()).status.code(), Some(2));
    assert_eq!(mcnoma(&["solve", "--preset", "nope"], dir.path()).status.code(), Some(2));
}

#[test]
fn infeasible_system_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::preset("equal-floors").unwrap();
    cfg.system.subchannel_cap_factor = 0.5;
    let path = write_config(dir.path(), &cfg);
    assert_eq!(mcnoma(&["solve", "--config", &path], dir.path()).status.code(), Some(3));
}

#[test]
fn montecarlo_writes_one_row_per_trial_plus_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = mcnoma(&["montecarlo", "--preset", "random-drop", "--trials", "10", "--out", "mc"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("mc/montecarlo.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "trial,wsr,runtime_ms");
    assert_eq!(lines.len(), 1 + 10 + 2);
    assert!(lines[11].starts_with("mean,") && lines[12].starts_with("std,"));
}

#[test]
fn schedule_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = mcnoma(&["schedule", "--preset", "equal-floors", "--slots", "200", "--out", "s"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("s/schedule.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "slot,user,rate,lambda,effective_weight");
    assert_eq!(csv.lines().count(), 1 + 200 * 10);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("s/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["completed_slots"], 200);
    assert_eq!(summary["mode"], "qos");
    assert_eq!(summary["average_rates"].as_array().unwrap().len(), 10);
}

#[test]
fn schedule_replays_a_channel_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::preset("equal-floors").unwrap();
    let config = cfg.system_config().unwrap();
    let fading = FadingConfig::default();
    let mut gen = ChannelGenerator::new(&config, &fading, UserPlacement::linear(10, 30.0)).unwrap();
    let snaps: Vec<_> = (0..5).map(|_| gen.next_snapshot().unwrap()).collect();
    let file = std::fs::File::create(dir.path().join("replay.csv")).unwrap();
    write_replay_csv(file, &snaps).unwrap();
    let out = mcnoma(&["schedule", "--replay", "replay.csv", "--slots", "8", "--out", "r"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("5 of 8"));
}

#[test]
fn bench_writes_timing_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = mcnoma(&["bench", "--reps", "3", "--out", "b"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("b/bench.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "kind,n_users,n_subchannels,mean_ns,reps");
    assert_eq!(text.lines().count(), 1 + 7 + 7 + 4);
}
