use std::path::Path;
use std::process::{Command, Output};

fn entreg(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entreg")).args(args).current_dir(cwd).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const LORENZ: &str = r#"{
    "system": "lorenz",
    "system_params": {"burn_in": 1000, "stride": 20},
    "basis_degree": 2,
    "n_samples": 400,
    "n_runs": 2,
    "seed": 3,
    "solvers": [{"solver": "ls"}, {"solver": "sindy", "lambda": 0.05}]
}"#;

#[test]
fn bench_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", LORENZ);
    let out = entreg(&["bench", "--config", &cfg, "--out-dir", "csv", "--format", "csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["runs.csv", "aggregates.csv", "timings.csv"] {
        assert!(dir.path().join("csv").join(f).exists(), "{f}");
    }
    let out = entreg(&["bench", "--config", &cfg, "--out-dir", "json", "--seed", "9"], dir.path());
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("json/report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["config"]["seed"], 9);
    assert_eq!(v["runs"].as_array().unwrap().len(), 4);
}

#[test]
fn generate_then_fit_the_written_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", LORENZ);
    let out = entreg(&["generate", "--config", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("truth.json").exists());

    let out = entreg(
        &["fit", "--data", "trajectory.csv", "--solver", "sindy", "--degree", "2", "--resimulate", "50"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["equations"].as_array().unwrap().len(), 3);
    let resim = std::fs::read_to_string(dir.path().join("resimulated.csv")).unwrap();
    assert_eq!(resim.lines().count(), 51);

    let out = entreg(&["generate", "--config", &cfg, "--format", "binary", "--out-dir", "bin"], dir.path());
    assert!(out.status.success());
    assert!(dir.path().join("bin/trajectory.bin").exists());
}

#[test]
fn fit_scores_a_configured_system() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", LORENZ);
    let out = entreg(&["fit", "--config", &cfg, "--solver", "ols"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["score"]["parameter_error"].as_f64().unwrap() >= 0.0);
}

#[test]
fn estimate_mi_on_columns() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("t,a,b,c\n");
    for i in 0..500 {
        let x = (i as f64 * 0.618_033_988_7).fract();
        csv.push_str(&format!("{i},{x},{},{}\n", x * x, (i as f64 * 0.414_213_56).fract()));
    }
    write(dir.path(), "d.csv", &csv);
    let out = entreg(&["estimate-mi", "--data", "d.csv", "--x", "a", "--y", "b", "--shuffles", "10"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["estimate"].as_f64().unwrap() > v["threshold"].as_f64().unwrap());

    let out = entreg(&["estimate-mi", "--data", "d.csv", "--x", "a", "--y", "b", "--z", "a"], dir.path());
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["estimate"].as_f64().unwrap().abs() < 0.1);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"system": "lorenz", "n_runs": 0}"#);
    let broken = write(dir.path(), "broken.json", "{ not json");
    let cases: Vec<Vec<&str>> = vec![
        vec!["bench", "--config", &bad],
        vec!["bench", "--config", &broken],
        vec!["bench", "--config", "missing.json"],
        vec!["bench"],
        vec!["fit", "--data", "missing.csv"],
        vec!["estimate-mi", "--data", "missing.csv", "--x", "a", "--y", "b"],
    ];
    for args in cases {
        let out = entreg(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let good = write(dir.path(), "cfg.json", LORENZ);
    let out = entreg(&["bench", "--config", &good, "--format", "xml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // A step this large makes the integrator blow up.
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"system": "lorenz", "system_params": {"dt": 0.5, "burn_in": 0},
            "basis_degree": 2, "n_samples": 500, "seed": 0, "solvers": [{"solver": "ls"}]}"#,
    );
    let out = entreg(&["generate", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    // The output directory cannot be created under a regular file.
    write(dir.path(), "blocker", "");
    let good = write(dir.path(), "good.json", LORENZ);
    let out = entreg(&["bench", "--config", &good, "--out-dir", "blocker/sub"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}
