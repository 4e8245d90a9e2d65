use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn surfhj(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surfhj")).current_dir(dir).args(args).output().unwrap()
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name).display().to_string()
}

fn files_under(dir: &Path) -> usize {
    if !dir.exists() {
        return 0;
    }
    std::fs::read_dir(dir).unwrap().count()
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    for text in ["{\"name\": \"x\", ", "{\"name\":\"x\",\"operation\":\"verify-hj\",\"gird\":{}}", "[]"] {
        std::fs::write(&bad, text).unwrap();
        let out = surfhj(tmp.path(), &["verify", "hj", "--config", bad.to_str().unwrap(), "--out", "o"]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(!tmp.path().join("o").exists());
    }
    let out = surfhj(tmp.path(), &["verify", "hj", "--config", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(files_under(&tmp.path().join("out")), 0);
}

#[test]
fn invalid_scenarios_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"name":"x","operation":"verify-hj","grid":{"levels":[32,48,64]}}"#,
        r#"{"name":"x","operation":"verify-hj","model":{"model":"string_theory"}}"#,
        r#"{"name":"x","operation":"verify-hj","model":{"model":"minimal_surface"}}"#,
        r#"{"name":"x","operation":"sweep"}"#,
        r#"{"name":"a/b","operation":"verify-legendre"}"#,
    ];
    for (i, text) in cases.iter().enumerate() {
        let path = tmp.path().join(format!("c{i}.json"));
        std::fs::write(&path, text).unwrap();
        let p = path.to_str().unwrap();
        let args: Vec<&str> = if text.contains("\"sweep\"") { vec!["sweep", p] } else if text.contains("legendre") { vec!["verify", "legendre", "--config", p] } else { vec!["verify", "hj", "--config", p] };
        assert_eq!(surfhj(tmp.path(), &args).status.code(), Some(2), "{text}");
    }
    assert_eq!(files_under(&tmp.path().join("out")), 0);
}

#[test]
fn operation_must_match_the_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let out = surfhj(tmp.path(), &["verify", "cauchy", "--config", &scenario("hj-scalar-field.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("verify-hj"));
}

#[test]
fn a_passing_run_writes_report_and_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = surfhj(tmp.path(), &["verify", "legendre", "--config", &scenario("legendre-identities.json"), "--seed", "42", "--out", "res"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("res/report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 42);
    assert_eq!(report["scenario"]["seed"], 42);
    assert_eq!(report["pass"], true);
    assert_eq!(report["artifacts"], serde_json::json!(["legendre.csv", "report.json"]));
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["eq"] == "eq10"));
    assert!(checks.iter().all(|c| c["pass"] == true));
    assert!(report["timing"]["wall_clock_s"].as_f64().unwrap() < 1.0);
    let csv = std::fs::read_to_string(tmp.path().join("res/legendre.csv")).unwrap();
    assert!(csv.starts_with("model_index,transversality,homogeneity,roundtrip,hp_slopes\n"));
}

#[test]
fn failing_checks_exit_1_and_still_report() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("strict.json");
    std::fs::write(&path, r#"{"name":"strict","operation":"run-field","grid":{"K":32},"tolerances":{"shooting":0.0}}"#).unwrap();
    let out = surfhj(tmp.path(), &["run", "field", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/strict/report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], false);
    assert!(tmp.path().join("out/strict/patch.csv").exists());
}

#[test]
fn sweep_writes_the_slope_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = surfhj(tmp.path(), &["sweep", &scenario("sweep-el-standing-wave.json"), "--levels", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(tmp.path().join("out/sweep-el-standing-wave/sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "level,K_or_h,residual");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("3,256,"));
}

#[test]
fn eps_sweep_fits_against_eps() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("eps.json");
    std::fs::write(
        &path,
        r#"{"name":"eps","operation":"sweep","grid":{"K":16,"levels":[16,32,64]},
            "sweep":{"target":"action-variation-eps","eps_points":3}}"#,
    )
    .unwrap();
    let out = surfhj(tmp.path(), &["sweep", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/eps/report.json")).unwrap()).unwrap();
    assert_eq!(report["checks"][0]["eq"], "eq9");
    let csv = std::fs::read_to_string(tmp.path().join("out/eps/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn seeded_runs_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &str| {
        let out = surfhj(tmp.path(), &["verify", "cauchy", "--config", &scenario("cauchy-envelope.json"), "--seed", "9", "--out", dir]);
        assert_eq!(out.status.code(), Some(0));
        let report = std::fs::read_to_string(tmp.path().join(dir).join("report.json")).unwrap();
        let csv = std::fs::read(tmp.path().join(dir).join("cauchy.csv")).unwrap();
        (surfhj_cli::report::strip_timing(&report).unwrap(), csv)
    };
    let (a, b) = (run("same"), run("same"));
    assert_eq!(a, b);
    let other = surfhj(tmp.path(), &["verify", "cauchy", "--config", &scenario("cauchy-envelope.json"), "--seed", "10", "--out", "other"]);
    assert_eq!(other.status.code(), Some(0));
    assert_ne!(std::fs::read(tmp.path().join("other/cauchy.csv")).unwrap(), a.1);
}
