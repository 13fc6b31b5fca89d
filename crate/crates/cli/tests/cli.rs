use std::path::Path;
use std::process::{Command, Output};

fn cbpost(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbpost"))
        .current_dir(dir)
        .env_remove("CBPOST_KAPPA_OVERRIDE")
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_input_is_a_usage_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = cbpost(dir.path(), &["fit", "variogram", "--input", "no_such_field.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no_such_field.csv"));
}

#[test]
fn zero_replications_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cbpost(dir.path(), &["coverage", "variogram", "--reps", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cbpost(dir.path(), &["fit", "markov", "--input", "x.csv", "--reps", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_field_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "1,2\n3,oops\n").unwrap();
    let o = cbpost(dir.path(), &["fit", "variogram", "--input", "bad.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.csv"), "{}", stderr(&o));
}

#[test]
fn simulate_then_fit_writes_provenance_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(cbpost(d, &["--seed", "4", "simulate", "grf", "--n", "12"]).status.success());
    let o = cbpost(d, &["--seed", "4", "fit", "variogram", "--input", "grf_field.csv", "--gamma-reps", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let field = std::fs::read_to_string(d.join("grf_field.csv")).unwrap();
    assert!(field.starts_with("# cbpost "));
    assert!(field.contains("# command: cbpost --seed 4 simulate grf --n 12"));
    assert!(field.contains("# seed: 4"));
    let post = std::fs::read_to_string(d.join("variogram_posterior.csv")).unwrap();
    assert!(post.contains("# seed: 4") && post.contains("theta,density"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("variogram_report.json")).unwrap()).unwrap();
    assert_eq!(report["provenance"]["seed"], 4);
    assert_eq!(report["provenance"]["config_hash"].as_str().unwrap().len(), 64);
    assert!(report["map"]["point"][0].as_f64().unwrap() > 0.0);
}

#[test]
fn validate_single_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let o = cbpost(dir.path(), &["validate", "--only", "kappa"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("validation.json")).unwrap()).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["oracle"] == "kappa"));
    let o = cbpost(dir.path(), &["validate", "--only", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn injected_kappa_fails_variance_and_identity_oracles() {
    let dir = tempfile::tempdir().unwrap();
    for (oracle, kappa) in [("variance", "0.01"), ("gamma-info", "0")] {
        let o = Command::new(env!("CARGO_BIN_EXE_cbpost"))
            .current_dir(dir.path())
            .env("CBPOST_KAPPA_OVERRIDE", kappa)
            .args(["validate", "--only", oracle])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(1), "{oracle}");
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("validation.json")).unwrap()).unwrap();
        assert_eq!(report["kappa_overridden"], true);
        assert_eq!(report["passed"], false);
    }
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("run.toml"), "seed = 9\n[simulate.grf]\nn = 7\ntheta = 0.5\n").unwrap();
    let o = cbpost(d, &["--config", "run.toml", "simulate", "grf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(d.join("grf_field.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 7);
    assert!(text.contains("# seed: 9"));
    std::fs::write(d.join("broken.toml"), "n = [").unwrap();
    assert_eq!(cbpost(d, &["--config", "broken.toml", "simulate", "grf"]).status.code(), Some(2));
}

#[test]
fn roughness_pipeline_from_simulated_transects() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(cbpost(d, &["simulate", "cylinders"]).status.success());
    let o = cbpost(d, &["fit", "roughness", "--input", "transects.manifest", "--no-detrend"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("roughness_report.json")).unwrap()).unwrap();
    assert_eq!(report["nu_a_mm"], 14160.0);
    let alpha = report["map"]["point"][0].as_f64().unwrap();
    assert!((30.0..70.0).contains(&alpha));
}
