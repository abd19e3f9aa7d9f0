use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_latentgraph"));
    cmd.env("LATENTGRAPH_THREADS", "1");
    cmd
}

fn run_ok(args: &[&str]) {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SPEC: &str = r#"{"graph":"G1","p":5,"r":2,"r_m":[2,3],"noise":{"type":"NM1","sigma":0.05},"N":120,"seed":9}"#;
const CONFIG: &str = r#"{"s":2,"max_iter_main":50,"max_iter_init":100}"#;

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    write(&spec, SPEC);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok(&["simulate", "--spec", spec.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    run_ok(&["simulate", "--spec", spec.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    for f in ["scores_m1.csv", "scores_m2.csv", "truth.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let header = std::fs::read_to_string(a.join("scores_m2.csv")).unwrap();
    assert!(header.starts_with("node,basis,sample_1,"));
    assert_eq!(header.lines().count(), 1 + 5 * 3);
}

#[test]
fn malformed_config_reports_field_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    write(&spec, SPEC);
    let data = dir.path().join("data");
    run_ok(&["simulate", "--spec", spec.to_str().unwrap(), "--out", data.to_str().unwrap()]);

    let cfg = dir.path().join("bad.json");
    write(&cfg, r#"{"s":2,"alpah":0.5}"#);
    let out = bin()
        .args(["fit", "--data", data.to_str().unwrap(), "--config", cfg.to_str().unwrap()])
        .args(["--out", dir.path().join("fit").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "SchemaError");
    assert_eq!(err["field"], "alpah");

    write(&cfg, r#"{"alpha":"half"}"#);
    let out = bin()
        .args(["fit", "--data", data.to_str().unwrap(), "--config", cfg.to_str().unwrap()])
        .args(["--out", dir.path().join("fit").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["field"], "alpha");
}

#[test]
fn simulate_fit_evaluate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    write(&dir.path().join("spec.json"), SPEC);
    write(&dir.path().join("config.json"), CONFIG);
    run_ok(&["simulate", "--spec", &p("spec.json"), "--out", &p("data")]);
    let truth = format!("{}/truth.json", p("data"));
    run_ok(&["fit", "--data", &p("data"), "--config", &p("config.json"), "--truth", &truth, "--out", &p("fit")]);
    for f in ["params.json", "trace.csv", "edges.csv", "config.json", "run_meta.json"] {
        assert!(dir.path().join("fit").join(f).exists(), "{f}");
    }
    let trace = std::fs::read_to_string(dir.path().join("fit/trace.csv")).unwrap();
    assert!(trace.starts_with("iter,objective,max_change,dist_max,dist_sum"));

    run_ok(&["evaluate", "--est", &p("fit"), "--truth", &truth, "--out", &p("eval/metrics.json")]);
    let m = read_json(&dir.path().join("eval/metrics.json"));
    for key in ["tpr", "fpr", "auc", "auc15"] {
        let v = m[key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&v), "{key} = {v}");
    }
    assert!(m["dist_max"].as_f64().unwrap().is_finite());
    let meta = read_json(&dir.path().join("eval/run_meta.json"));
    assert_eq!(meta["command"], "evaluate");
    assert_eq!(meta["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn sweep_writes_one_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    write(&dir.path().join("spec.json"), SPEC);
    write(&dir.path().join("config.json"), CONFIG);
    let out = bin()
        .args(["sweep", "--spec", &p("spec.json"), "--config", &p("config.json")])
        .args(["--vary", "s=1..3", "--replicates", "2", "--out", &p("sweep.csv")])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("replicate")).count(), 2);
    let mut rdr = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(rdr.records().count(), 6);
    assert!(dir.path().join("run_meta.json").exists());
}

#[test]
fn sweep_rejects_bad_vary() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    write(&spec, SPEC);
    let out = bin()
        .args(["sweep", "--spec", spec.to_str().unwrap(), "--vary", "q=1..3"])
        .args(["--out", dir.path().join("x.csv").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["field"], "vary");
}

#[test]
fn select_picks_a_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    write(&dir.path().join("spec.json"), SPEC);
    write(&dir.path().join("config.json"), CONFIG);
    write(&dir.path().join("grid.json"), r#"{"s":[1,2],"alpha":[1.0],"tau1":[0.25],"tau2":[100.0]}"#);
    run_ok(&["simulate", "--spec", &p("spec.json"), "--out", &p("data")]);
    run_ok(&[
        "select", "--data", &p("data"), "--grid", &p("grid.json"), "--config", &p("config.json"),
        "--folds", "2", "--k", "2", "--out", &p("chosen.json"),
    ]);
    let chosen = read_json(&dir.path().join("chosen.json"));
    assert_eq!(chosen["k"], 2);
    assert_eq!(chosen["scores"].as_array().unwrap().len(), 2);
    let s = chosen["config"]["s"].as_u64().unwrap();
    assert!(s == 1 || s == 2);
}
