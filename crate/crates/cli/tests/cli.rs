use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pathfollow(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathfollow"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bounds_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = pathfollow(&["bounds"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("T1 <= 1340.29 s"), "{text}");
    assert!(text.contains("T2 <= 60.07 s"), "{text}");
    assert!(text.contains("T3 <= 60.07 s"), "{text}");
}

#[test]
fn bounds_follow_the_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"guidance": {"m2": 20, "n2": 4}}"#).unwrap();
    let o = pathfollow(&["bounds", "--config", "c.json"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("T2 <= 30.03 s"), "{}", stdout(&o));
}

#[test]
fn unknown_scenario_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"scenario": "zigzag"}"#).unwrap();
    let o = pathfollow(&["run", "--config", "c.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("UnknownScenario"), "{}", stderr(&o));

    let o = pathfollow(&["run", "--scenario", "zigzag"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), "{\n  \"guidance\": {\"alpha1\": 0.5}\n}").unwrap();
    let o = pathfollow(&["run", "-c", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpha1 must exceed 1"));

    fs::write(dir.path().join("typo.json"), "{\n  \"simulaton\": {}\n}").unwrap();
    let o = pathfollow(&["run", "-c", "typo.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ParseError at line 2"), "{}", stderr(&o));

    let o = pathfollow(&["run", "-c", "missing.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = pathfollow(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_writes_trajectory_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"scenario": "scurve", "simulation": {"t_end": 2}, "output": {"dir": "res"}}"#,
    )
    .unwrap();
    let o = pathfollow(&["run", "-c", "c.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("res/trajectory.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2002);
    assert!(lines.iter().all(|l| l.split(',').count() == 23));
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("res/metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["scenario"], "scurve");
    assert_eq!(metrics["metrics"]["samples"], 2001);
    assert_eq!(metrics["provenance"]["dt"], 0.001);
    assert_eq!(metrics["provenance"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn run_failure_on_unwritable_output_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("blocker"), "").unwrap();
    let o = pathfollow(
        &["run", "--scenario", "scurve", "--out-dir", "blocker/sub"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn batch_preset_gives_five_result_sets() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"scenario": "straightline", "batch": {"preset": "straight_line"}}"#,
    )
    .unwrap();
    let o = pathfollow(&["batch", "-c", "c.json", "--out-dir", "b", "--jobs", "2"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    for id in ["S1", "S2", "S3", "S4", "S5"] {
        assert!(dir.path().join("b").join(id).join("trajectory.csv").exists());
        assert!(dir.path().join("b").join(id).join("metrics.json").exists());
        let line = text.lines().find(|l| l.starts_with(id)).unwrap();
        assert!(line.trim_end().ends_with("yes"), "{line}");
    }
}

#[test]
fn batch_without_cases_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = pathfollow(&["batch"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_passing_checks_exit_0_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("v.json"),
        r#"{"seed": 5, "verify": {"checks": ["8", "10"], "command_signals": 3, "signal_duration": 1}}"#,
    )
    .unwrap();
    let a = pathfollow(&["verify", "-c", "v.json", "--check", "10"], dir.path());
    assert!(a.status.success(), "{}", stdout(&a));
    assert!(stdout(&a).starts_with("PASS [10]"));
    let one = pathfollow(&["verify", "-c", "v.json", "--json"], dir.path());
    let two = pathfollow(&["verify", "-c", "v.json", "--json"], dir.path());
    assert_eq!(stdout(&one), stdout(&two));
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&one)).unwrap();
    assert_eq!(parsed.as_array().unwrap().len(), 2);
}

#[test]
fn verify_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = pathfollow(&["verify", "--check", "1"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).starts_with("FAIL [1]"));
}

#[test]
fn scenarios_lists_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let o = pathfollow(&["scenarios"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["helix_v3", "helix_v0", "scurve", "timevarying", "straightline"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
}
