use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_workload-forecast"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const TINY: &str = r#"
modes = ["univariate"]
components = ["overall"]
lag_grid_s = [30, 60, 120]
pred_grid_s = [60, 120]
n_subjects = 3

[train]
max_epochs = 2
patience = 1
"#;

fn tiny_setup(dir: &Path) -> (String, String, String) {
    let cfg = dir.join("tiny.toml");
    fs::write(&cfg, TINY).unwrap();
    (
        cfg.to_string_lossy().into_owned(),
        dir.join("cohort").to_string_lossy().into_owned(),
        dir.join("out").join("results.json").to_string_lossy().into_owned(),
    )
}

#[test]
fn synth_run_table_stats() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, data, out) = tiny_setup(dir.path());

    let o = wf(&["synth", "--config", &cfg, "--data-dir", &data]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_dir(&data).unwrap().count(), 3);

    let o = wf(&["run", "--config", &cfg, "--data-dir", &data, "--out", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let o = wf(&["table", "--out", &out, "--mode", "univariate", "--component", "overall"]);
    assert_eq!(code(&o), 0);
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("30s Lag") && table.contains("120s Pred."));

    let o = wf(&["stats", "--out", &out]);
    assert_eq!(code(&o), 0);
    let stats = String::from_utf8(o.stdout).unwrap();
    assert!(stats.contains("χ²(2, 3)"), "{stats}");
    assert!(stats.contains("30s vs 120s lag"));

    // two lag columns are not enough for the lag analysis
    let o = wf(&["stats", "--out", &out, "--lag", "30,60"]);
    assert_eq!(code(&o), 1);
    // no such table in the results
    let o = wf(&["table", "--out", &out, "--mode", "multivariate", "--component", "overall"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn all_writes_results_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, data, out) = tiny_setup(dir.path());
    let o = wf(&["all", "--config", &cfg, "--data-dir", &data, "--out", &out, "--pred", "60"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(Path::new(&out).with_extension("txt")).unwrap();
    assert!(report.contains("Overall (univariate)"));
    assert!(report.contains("Lag-horizon analysis"));
    assert!(!report.contains("120s Pred."));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["cells"].as_array().unwrap().len(), 3);
    assert_eq!(json["config"]["pred_grid_s"], serde_json::json!([60]));
}

#[test]
fn validation_errors_exit_1() {
    assert_eq!(code(&wf(&["frobnicate"])), 1);
    assert_eq!(code(&wf(&["run", "--component", "smell"])), 1);
    assert_eq!(code(&wf(&["run", "--lag", "45"])), 1);
    assert_eq!(code(&wf(&["run", "--lag", "240", "--pred", "480"])), 1);
    assert_eq!(code(&wf(&["run", "--workers", "0"])), 1);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "unknown_field = 3\n").unwrap();
    assert_eq!(code(&wf(&["run", "--config", bad.to_str().unwrap()])), 1);

    let o = wf(&["--help"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("synth"));
}

#[test]
fn runtime_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&wf(&["table", "--out", missing.to_str().unwrap()])), 2);

    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let data = blocker.join("cohort");
    assert_eq!(code(&wf(&["synth", "--data-dir", data.to_str().unwrap()])), 2);
}
