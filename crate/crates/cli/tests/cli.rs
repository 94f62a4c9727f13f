use std::path::Path;
use std::process::{Command, Output};

fn cevib(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cevib")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("exp.toml");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SYNTH: &str = r#"
replications = 2
seed = 3
methods = ["oracle", "ols2"]

[dataset]
kind = "synthetic"
mu = [0.0, 1.0]

[dataset.generator]
n_control = 120
n_treated = 60
dim = 3
"#;

#[test]
fn run_writes_results_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SYNTH);
    let out = dir.path().join("res");
    let o = cevib(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("oracle"));
    for f in ["records.jsonl", "summary.csv", "summary.txt", "config.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let records = std::fs::read_to_string(out.join("records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 2 * 2 * 2 * 2);

    let s = cevib(&["summarize", out.join("records.jsonl").to_str().unwrap(), "--out", dir.path().join("s.csv").to_str().unwrap()]);
    assert!(s.status.success());
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert!(csv.starts_with("dataset,method,scope,metric,mean,std,n"));
}

#[test]
fn sweep_overrides_shift_list() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SYNTH);
    let out = dir.path().join("sweep");
    let o = cevib(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--mu", "0,2,4", "--methods", "ols2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
}

#[test]
fn synth_export_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("synth.csv");
    let o = cevib(&[
        "synth-export", "--out", path.to_str().unwrap(), "--mu", "1", "--n-control", "50", "--n-treated", "20", "--dim", "4",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 70);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 5 + 4);
    assert!(dir.path().join("synth.csv.meta.json").exists());
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "replications = 0\n[dataset]\nkind = \"twins\"\n");
    assert_eq!(cevib(&["run", "--config", &cfg]).status.code(), Some(1));
    let o = cevib(&["run", "--data-dir", "/nonexistent", "--files", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let cfg = write_config(dir.path(), SYNTH);
    assert_eq!(cevib(&["run", "--config", &cfg, "--files", "1-3"]).status.code(), Some(1));
}

#[test]
fn excessive_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "methods = [\"ols2\"]\n[dataset]\nkind = \"synthetic\"\nmu = [0.0]\n[dataset.generator]\nn_control = 2\nn_treated = 1\ndim = 2\n",
    );
    let o = cevib(&["run", "--config", &cfg, "--out", dir.path().join("r").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
