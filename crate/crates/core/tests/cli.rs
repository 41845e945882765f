use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
        .display()
        .to_string()
}

fn coopdef(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coopdef"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn evaluate_baseline_below_default_threshold() {
    let o = coopdef(&["evaluate", "--scenario", &scenario("baseline_cooperative.json")]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["threshold"], 0.05);
    assert_eq!(v["breached"], false);
    let rows = v["p_pair"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.as_array().unwrap().len() == 4));
    assert!(o.stderr.is_empty());
}

#[test]
fn breach_maps_to_exit_two() {
    let path = scenario("baseline_cooperative.json");
    let o = coopdef(&["evaluate", "--scenario", &path, "--threshold", "0.01"]);
    assert_eq!(o.status.code(), Some(2));
    let o = coopdef(&["evaluate", "--scenario", &path, "--mode", "independent"]);
    assert_eq!(o.status.code(), Some(2));
    let o = coopdef(&["evaluate", "--scenario", &scenario("baseline_independent.json")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn input_errors_exit_one_with_diagnostic() {
    let o = coopdef(&["evaluate", "--scenario", "/nonexistent/scenario.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));

    let path = scenario("baseline_cooperative.json");
    for t in ["0", "1", "1.5", "-0.2"] {
        let o = coopdef(&["evaluate", "--scenario", &path, "--threshold", t]);
        assert_eq!(o.status.code(), Some(1), "threshold {t}");
    }
    let o = coopdef(&["evaluate", "--scenario", &path, "--mode", "solo"]);
    assert_eq!(o.status.code(), Some(1));
    let o = coopdef(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn csv_report_has_header_and_one_row() {
    let o = coopdef(&["evaluate", "--scenario", &scenario("baseline_cooperative.json"), "--format", "csv"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("mode,p_system,breached,threshold,p_ship[C1]"));
    assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
    assert!(lines[1].starts_with("cooperative,"));
}

#[test]
fn out_and_assignment_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let assign = dir.path().join("assign.csv");
    let o = coopdef(&[
        "evaluate",
        "--scenario",
        &scenario("baseline_cooperative.json"),
        "--out",
        out.to_str().unwrap(),
        "--assignment-out",
        assign.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["p_system"].as_f64().unwrap() > 0.0);
    let csv = std::fs::read_to_string(&assign).unwrap();
    assert!(csv.starts_with("block,direction,C1,C2,C3,C4\nline,T1,600"));
}

#[test]
fn compare_reports_both_modes_and_gap() {
    let o = coopdef(&["compare", "--scenario", &scenario("baseline_cooperative.json")]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let coop = v["cooperative"]["p_system"].as_f64().unwrap();
    let indep = v["independent"]["p_system"].as_f64().unwrap();
    assert!(coop <= indep);
    assert_eq!(v["gap"].as_f64().unwrap(), coop - indep);

    let o = coopdef(&["compare", "--scenario", &scenario("baseline_cooperative.json"), "--format", "csv"]);
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(rows[0].starts_with("mode,"));
    assert!(rows[1].starts_with("cooperative,"));
    assert!(rows[2].starts_with("independent,"));
    assert!(text.starts_with("# gap: -"));
}

#[test]
fn compare_without_square_fleet_or_pairing_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("three.json");
    std::fs::write(
        &path,
        r#"{"target": [0, 0],
            "missiles": [{"id": "T1", "pos": [-800, 0], "launch_rate": 0.1, "speed": 1020}],
            "ships": [{"id": "C1", "pos": [-200, 0], "radius": 400, "intercept_rate": 0.02, "fire_units": 7},
                      {"id": "C2", "pos": [200, 0], "radius": 400, "intercept_rate": 0.02, "fire_units": 7}],
            "mode": "cooperative"}"#,
    )
    .unwrap();
    let o = coopdef(&["compare", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));
    assert!(o.stdout.is_empty());
    // Cooperative evaluation of the same fleet is fine.
    let o = coopdef(&["evaluate", "--scenario", path.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(1));
}

#[test]
fn sweep_presets_and_errors() {
    let o = coopdef(&["sweep", "--preset", "fig5a"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 22);
    assert!(text.contains("cooperative_p_system") && text.contains("independent_p_system"));

    let o = coopdef(&["sweep", "--preset", "fig8c"]);
    assert_eq!(stdout(&o).lines().filter(|l| !l.starts_with('#')).count(), 362);

    let o = coopdef(&["sweep", "--preset", "fig99"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("fig5a") && err.contains("fig8f"));

    let o = coopdef(&["sweep"]);
    assert_eq!(o.status.code(), Some(1));
    let o = coopdef(&["sweep", "--preset", "fig5a", "--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        format!(
            r#"{{"name": "radius", "base": "{}", "parameter": "ship[*].radius",
                "grid": [300, 400, 500], "modes": ["cooperative"]}}"#,
            scenario("baseline_cooperative.json")
        ),
    )
    .unwrap();
    let o = coopdef(&["sweep", "--spec", spec.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("# preset: radius\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);

    std::fs::write(&spec, r#"{"base": "missing.json", "parameter": "ship[*].radius", "grid": [1]}"#).unwrap();
    let o = coopdef(&["sweep", "--spec", spec.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_is_reproducible_and_seed_sensitive() {
    let path = scenario("baseline_cooperative.json");
    let args = ["simulate", "--scenario", &path, "--seed", "7", "--arrivals", "5000"];
    let a = coopdef(&args);
    let b = coopdef(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = coopdef(&["simulate", "--scenario", &path, "--seed", "8", "--arrivals", "5000"]);
    assert_ne!(a.stdout, c.stdout);
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["seed"], 7);
    assert_eq!(v["arrivals_counted"][0][0], 5000);

    let csv = coopdef(&["simulate", "--scenario", &path, "--seed", "7", "--arrivals", "5000", "--format", "csv"]);
    let text = stdout(&csv);
    assert!(text.starts_with("# scenario_sha256: "));
    assert!(text.contains("# seed: 7\n"));
}

#[test]
fn simulate_rejects_bad_knobs() {
    let path = scenario("baseline_cooperative.json");
    for args in [
        vec!["--arrivals", "500", "--warmup", "1000"],
        vec!["--replications", "0"],
        vec!["--spacing", "0"],
        vec!["--queue-mode", "pooled"],
    ] {
        let mut full = vec!["simulate", "--scenario", &path];
        full.extend(args.iter().copied());
        let o = coopdef(&full);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn unstable_stream_is_warned_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hot.json");
    std::fs::write(
        &path,
        r#"{"target": [0, 0],
            "missiles": [{"id": "T1", "pos": [-800, 0], "launch_rate": 1.0, "speed": 1020}],
            "ships": [{"id": "C1", "pos": [0, 0], "radius": 400, "intercept_rate": 0.1, "fire_units": 2}]}"#,
    )
    .unwrap();
    let o = coopdef(&["evaluate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["p_system"], 1.0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unstable"));
}
