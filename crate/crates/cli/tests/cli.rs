use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fluxguide_cli::{compare_report, CliError, EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK};

const SCENARIO: &str = r#"
name = "near"
planner = "both"

[start]
p1 = [0.0, 0.0, 0.0]
p2 = [0.0, 5.0, 0.0]
p3 = [0.0, 5.0, 5.0]
p4 = [0.0, 0.0, 5.0]

[target]
position = [10.0, 10.0, 10.0]

[ls]
betas = [0.0, 400.0]
"#;

fn fluxguide(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fluxguide")).args(args).output().unwrap()
}

fn write_scenario(dir: &Path, extra: &str) -> PathBuf {
    let file = dir.join("scenario.toml");
    std::fs::write(&file, format!("{SCENARIO}{extra}")).unwrap();
    file
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), "");
    let out = dir.path().join("out");
    let o = fluxguide(&["run", "--scenario", s(&scenario), "--out", s(&out), "--quiet"]);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    for f in ["path.csv", "trajectory.csv", "sim.csv", "metrics.json", "timing.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert!(!out.join("followers.csv").exists());
    let metrics: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("metrics.json")).unwrap()).unwrap();
    for key in ["combined_length_m", "per_method", "max_speed_mps", "max_accel_mps2", "max_tracking_error_m", "iterations", "converged", "seed"] {
        assert!(metrics.get(key).is_some(), "{key}");
    }
    let methods: Vec<_> = metrics["per_method"].as_object().unwrap().keys().cloned().collect();
    assert_eq!(methods, ["fg", "ls_beta0", "ls_beta400"]);
    assert_eq!(metrics["combined_length_m"], metrics["per_method"]["fg"]["combined_length_m"]);
}

#[test]
fn plan_then_simulate_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.toml");
    std::fs::write(&scenario, format!("emit_followers = true\n{SCENARIO}")).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(fluxguide(&["run", "--scenario", s(&scenario), "--out", s(&a), "--quiet"]).status.code(), Some(EXIT_OK));
    assert_eq!(fluxguide(&["plan", "--scenario", s(&scenario), "--out", s(&b), "--quiet"]).status.code(), Some(EXIT_OK));
    assert!(!b.join("sim.csv").exists());
    assert_eq!(fluxguide(&["simulate", "--scenario", s(&scenario), "--out", s(&b), "--quiet"]).status.code(), Some(EXIT_OK));
    for f in ["path.csv", "trajectory.csv", "sim.csv", "followers.csv", "metrics.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn not_converged_has_its_own_exit_code_and_keeps_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), "[fg]\nmax_outer_iters = 3\n");
    let out = dir.path().join("out");
    let o = fluxguide(&["run", "--scenario", s(&scenario), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(EXIT_NOT_CONVERGED));
    assert!(String::from_utf8_lossy(&o.stdout).contains("not converged"));
    let metrics: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["converged"], false);
    assert_eq!(metrics["per_method"]["fg"]["converged"], false);
    assert_eq!(metrics["per_method"]["ls_beta0"]["converged"], true);
    assert!(out.join("path.csv").is_file());
}

#[test]
fn bad_scenarios_exit_with_a_located_message() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), "[fg]\nside_lenght = 5.0\n");
    let o = fluxguide(&["plan", "--scenario", s(&scenario), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(EXIT_ERROR));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("scenario.toml") && err.contains("side_lenght") && err.contains("line"), "{err}");

    let o = fluxguide(&["plan", "--scenario", s(&dir.path().join("missing.toml"))]);
    assert_eq!(o.status.code(), Some(EXIT_ERROR));
}

fn plan_metrics(dir: &Path, name: &str, target: &str) -> PathBuf {
    let text = SCENARIO.replace("near", name).replace("[10.0, 10.0, 10.0]", target);
    let scenario = dir.join(format!("{name}.toml"));
    std::fs::write(&scenario, text).unwrap();
    let out = dir.join(name);
    assert_eq!(fluxguide(&["plan", "--scenario", s(&scenario), "--out", s(&out), "--quiet"]).status.code(), Some(EXIT_OK));
    out.join("metrics.json")
}

#[test]
fn report_tabulates_targets_by_method() {
    let dir = tempfile::tempdir().unwrap();
    let a = plan_metrics(dir.path(), "front", "[12.0, 10.0, 10.0]");
    let b = plan_metrics(dir.path(), "rear", "[-12.0, 10.0, 10.0]");
    let report = compare_report(&[a.clone(), b.clone()]).unwrap();
    assert_eq!(report.methods, ["ls_beta0", "ls_beta400", "fg"]);
    assert_eq!(report.rows.len(), 2);
    assert!(report.rows.iter().all(|r| r.lengths.iter().all(Option::is_some)));
    assert_eq!(report.rows[1].label, "rear");
    assert_eq!(compare_report(std::slice::from_ref(&a)).unwrap().rows.len(), 1);

    let csv_out = dir.path().join("table.csv");
    let o = fluxguide(&["report", s(&a), s(&b), "--out", s(&csv_out)]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&o.stdout).lines().count() == 3);
    let text = std::fs::read_to_string(csv_out).unwrap();
    assert!(text.starts_with("target,ls_beta0,ls_beta400,fg\nfront,"));
}

#[test]
fn report_names_the_file_with_an_empty_length() {
    let dir = tempfile::tempdir().unwrap();
    let good = plan_metrics(dir.path(), "front", "[12.0, 10.0, 10.0]");
    let mut value: serde_json::Value = serde_json::from_slice(&std::fs::read(&good).unwrap()).unwrap();
    value["per_method"]["fg"]["combined_length_m"] = serde_json::Value::Null;
    let bad = dir.path().join("broken.json");
    std::fs::write(&bad, serde_json::to_vec(&value).unwrap()).unwrap();
    let err = compare_report(&[good, bad.clone()]).unwrap_err();
    assert!(matches!(&err, CliError::Report { path, .. } if *path == bad));
    assert!(err.to_string().contains("broken.json") && err.to_string().contains("combined_length_m"));
    assert!(compare_report(&[]).is_err());
}
