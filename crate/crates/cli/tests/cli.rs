use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_blindsr2d"));
    cmd.env_remove("BLINDSR2D_OUT")
        .env_remove("BLINDSR2D_THREADS");
    cmd
}

fn small_run(out: &Path, mode: &str, extra: &[&str]) -> Output {
    let mut cmd = bin();
    cmd.args([
        "run",
        "--mode",
        mode,
        "--n",
        "3",
        "--k",
        "1",
        "--seed",
        "4",
        "--shifts",
        "0.3:0.65",
        "--srf",
        "2,6",
        "--scan-grid",
        "256",
        "--surface-csv-grid",
        "16",
        "--out",
    ])
    .arg(out)
    .args(extra);
    cmd.output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn small_run_succeeds_and_verifies() {
    let tmp = tempfile::tempdir().unwrap();
    let out = small_run(tmp.path(), "both", &[]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text
        .lines()
        .any(|l| l.starts_with("PASS dual.solver_optimal")));
    assert!(!text.contains("FAIL"));
    let verified = bin()
        .args(["verify", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(verified.status.code(), Some(0));
    let emitted = bin()
        .args(["emit", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(emitted.status.code(), Some(0));
    assert!(tmp.path().join("plot").join("error_vs_srf.csv").exists());
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"mode": "grid", "n": 3, "k": [1], "seed": 9, "srf": [2.0]}"#,
    )
    .unwrap();
    let run = tmp.path().join("run");
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--seed", "5", "--out"])
        .arg(&run)
        .output()
        .unwrap();
    assert!(
        matches!(out.status.code(), Some(0 | 1)),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest = json(&run.join("manifest.json"));
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["config"]["n"], 3);
    assert_eq!(manifest["config"]["mode"], "grid");
}

#[test]
fn environment_sets_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .env("BLINDSR2D_OUT", tmp.path())
        .args([
            "run", "--mode", "grid", "--n", "2", "--k", "1", "--srf", "2",
        ])
        .output()
        .unwrap();
    assert!(matches!(out.status.code(), Some(0 | 1)));
    assert!(tmp.path().join("result.json").exists());
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", "--preset", "fig9"],
        vec!["run", "--k", "0"],
        vec!["run", "--shifts", "0.1-0.2"],
        vec!["run", "--bogus"],
        vec!["verify", "--out", "/nonexistent/run"],
        vec!["emit", "--out", "/nonexistent/run"],
    ];
    for args in cases {
        let out = bin().current_dir(tmp.path()).args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn iteration_cap_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let out = small_run(tmp.path(), "dual", &["--max-iters", "3"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(tmp.path().join("result.json").exists());
}

#[test]
fn verify_flags_tampered_results() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(small_run(tmp.path(), "dual", &[]).status.code(), Some(0));
    let path = tmp.path().join("result.json");
    let mut v = json(&path);
    let checks = v["checks"].as_array_mut().unwrap();
    let c = checks
        .iter_mut()
        .find(|c| c["name"] == "dual.sup_norm")
        .unwrap();
    c["value"] = serde_json::json!(2.0);
    std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    let out = bin()
        .args(["verify", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("INCONSISTENT dual.sup_norm"));
}
