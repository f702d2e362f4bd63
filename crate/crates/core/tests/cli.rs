//! The binary's commands, exit codes and environment overrides.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_migplan"));
    for (k, _) in std::env::vars() {
        if k.starts_with("MIGPLAN_") {
            c.env_remove(k);
        }
    }
    c
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_accepts_shipped_scenarios() {
    for name in ["bursty.toml", "uniform.toml", "periodic.toml", "preinit.toml"] {
        let o = run(&["validate", "--scenario", data(name).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
    }
}

#[test]
fn missing_scenario_is_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["compare", "--scenario", "/no/such/file.toml", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing-file"));
    assert!(!out.exists());
}

#[test]
fn floor_above_largest_instance_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let src = std::fs::read_to_string(data("preinit.toml")).unwrap().replace("min_deploy_gpcs = 2", "min_deploy_gpcs = 8");
    let path = dir.path().join("l8.toml");
    std::fs::write(&path, src).unwrap();
    for cmd in ["validate", "compare"] {
        let o = run(&[cmd, "--scenario", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{cmd}");
        assert!(stderr(&o).contains("deployment-floor unsatisfiable"), "{}", stderr(&o));
    }
}

#[test]
fn compare_reports_three_planners_with_dp_ahead() {
    let o = run(&["compare", "--scenario", data("preinit.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = String::from_utf8(o.stdout).unwrap();
    let fluid: Vec<(String, f64)> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[1] == "fluid")
        .map(|f| (f[0].to_string(), f[2].parse().unwrap()))
        .collect();
    let names: Vec<&str> = fluid.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["dp", "static-proportional", "window-boundary"]);
    assert!(fluid[0].1 >= fluid[1].1 && fluid[0].1 >= fluid[2].1, "{table}");
}

#[test]
fn environment_mirrors_flags() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .arg("plan")
        .env("MIGPLAN_SCENARIO", data("preinit.toml"))
        .env("MIGPLAN_PREINIT", "off")
        .env("MIGPLAN_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let plan = std::fs::read_to_string(dir.path().join("plan.json")).unwrap();
    assert!(plan.contains("\"preinit\": false"));
}

#[test]
fn granularity_override() {
    let s = data("preinit.toml");
    let half = run(&["plan", "--scenario", s.to_str().unwrap(), "--granularity", "0.5"]);
    assert_eq!(half.status.code(), Some(0), "{}", stderr(&half));
    let doc: serde_json::Value = serde_json::from_slice(&half.stdout).unwrap();
    assert_eq!(doc["windows"][0]["plan"]["steps"].as_array().unwrap().len(), 10);
    let bad = run(&["plan", "--scenario", s.to_str().unwrap(), "--granularity", "2"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn emit_lp_writes_a_valid_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["emit-lp", "--scenario", data("preinit.toml").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("window_0.lp")).unwrap();
    migplan::planner::validate_lp(&text).unwrap();
    let o = run(&["emit-lp", "--scenario", data("preinit.toml").to_str().unwrap(), "--window", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_solver_is_bad_input() {
    let o = run(&["plan", "--scenario", data("preinit.toml").to_str().unwrap(), "--solver", "gurobi"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["plan", "--scenario", data("preinit.toml").to_str().unwrap(), "--predictor", "ewma:2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oversized_bruteforce_is_refused() {
    let o = run(&["plan", "--scenario", data("preinit.toml").to_str().unwrap(), "--solver", "bruteforce"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("search-cap-exceeded"), "{}", stderr(&o));
}

#[test]
fn simulate_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate",
        "--scenario",
        data("preinit.toml").to_str().unwrap(),
        "--seed",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["report.json", "plan.json", "windows_fluid.csv", "windows_requests.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("windows_fluid.csv")).unwrap();
    assert!(csv.starts_with("window,model,goodput,slo,acc,reconfigs\n"));
    assert_eq!(csv.lines().count(), 3);
}
