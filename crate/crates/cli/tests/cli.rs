use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn smc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture(name: &str) -> String {
    fixtures().join(name).to_str().unwrap().to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn lambda_zero_on_complete_input_returns_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "x.csv", "a,b\n1,2\n3,5\n-4,0.25\n");
    let out = dir.path().join("fit");
    let o = smc(&["complete", "--input", &input, "--method", "lrmc", "--lambda", "0", "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let imputed = fs::read_to_string(dir.path().join("fit.imputed.csv")).unwrap();
    assert_eq!(imputed, "a,b\n1,2\n3,5\n-4,0.25\n");
    let meta = read_json(&dir.path().join("fit.fit.json"));
    assert_eq!(meta["method"], "lrmc");
    assert_eq!(meta["lambda"], 0.0);
}

#[test]
fn observed_cells_survive_and_missing_cells_are_filled() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "x.csv", "a,b,c\n1,2,3\n2,NA,6\n3,6,NA\n4,8,12\n");
    let out = dir.path().join("fit");
    let o = smc(&["complete", "--input", &input, "--method", "lrmc", "--rank", "1", "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("fit.imputed.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["1", "2", "3"]);
    assert_eq!(rows[3], ["4", "8", "12"]);
    assert!(!text.contains("NA"));
    let filled: f64 = rows[1][1].parse().unwrap();
    assert!((filled - 4.0).abs() < 0.5, "{filled}");
}

#[test]
fn fully_missing_column_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "x.csv", "a,ozone\n1,NA\n2,NA\n");
    let o = smc(&["complete", "--input", &input, "--method", "lrmc", "--lambda", "0.1", "--output", dir.path().join("f").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ozone"), "{}", stderr(&o));
}

#[test]
fn malformed_cell_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "x.csv", "a,b\n1,2\n3,oops\n");
    let o = smc(&["complete", "--input", &input, "--method", "lrmc", "--lambda", "0.1", "--output", dir.path().join("f").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3, column 2"), "{}", stderr(&o));
}

#[test]
fn header_only_input_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "x.csv", "a,b\n");
    let o = smc(&["complete", "--input", &input, "--method", "lrmc", "--lambda", "0.1", "--output", dir.path().join("f").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spatial_method_needs_a_design() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "x.csv", "a,b\n1,2\n3,NA\n5,6\n");
    let o = smc(&["complete", "--input", &input, "--method", "smc", "--lambda", "0.1", "--output", dir.path().join("f").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plain_completion_refuses_new_locations() {
    let dir = tempfile::tempdir().unwrap();
    let o = smc(&[
        "complete",
        "--input",
        &fixture("toy-c-20.csv"),
        "--method",
        "lrmc",
        "--rank",
        "1",
        "--predict",
        &fixture("toy-c-20.new-coords.csv"),
        "--output",
        dir.path().join("f").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot predict"), "{}", stderr(&o));
}

#[test]
fn unreachable_rank_is_a_solver_error() {
    // Orthogonal zero-mean columns of equal norm: the rank jumps 0 → 2.
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "x.csv", "a,b\n1,1\n-1,1\n1,-1\n-1,-1\n");
    let o = smc(&["complete", "--input", &input, "--method", "lrmc", "--rank", "1", "--output", dir.path().join("f").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("unreachable"));
}

#[test]
fn golden_fixture_mse() {
    let golden = read_json(&fixtures().join("toy-c-20.golden.json"));
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("toy");
    let o = smc(&[
        "complete",
        "--input",
        &fixture("toy-c-20.csv"),
        "--coords",
        &fixture("toy-c-20.coords.csv"),
        "--covariates",
        &fixture("toy-c-20.covariates.csv"),
        "--knots",
        "25",
        "--method",
        "smc",
        "--rank",
        "1",
        "--truth",
        &fixture("toy-c-20.truth.csv"),
        "--output",
        prefix.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let meta = read_json(&dir.path().join("toy.fit.json"));
    let got = meta["mse_missing_entries"].as_f64().unwrap();
    let want = golden["mse_missing_entries"].as_f64().unwrap();
    assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
    assert_eq!(meta["attained_rank"], 1);
    assert_eq!(meta["design_columns"].as_array().unwrap().len(), 30);
}

#[test]
fn saved_fit_predicts_like_the_fitting_run() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("toy");
    let o = smc(&[
        "--quiet",
        "complete",
        "--input",
        &fixture("toy-c-20.csv"),
        "--coords",
        &fixture("toy-c-20.coords.csv"),
        "--covariates",
        &fixture("toy-c-20.covariates.csv"),
        "--method",
        "smc",
        "--rank",
        "1",
        "--predict",
        &fixture("toy-c-20.new-coords.csv"),
        "--predict-covariates",
        &fixture("toy-c-20.new-covariates.csv"),
        "--output",
        prefix.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stderr.is_empty());
    let again = dir.path().join("again.csv");
    let o = smc(&[
        "predict",
        "--fit",
        dir.path().join("toy.fit.json").to_str().unwrap(),
        "--coords",
        &fixture("toy-c-20.new-coords.csv"),
        "--covariates",
        &fixture("toy-c-20.new-covariates.csv"),
        "--output",
        again.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = fs::read_to_string(dir.path().join("toy.predicted.csv")).unwrap();
    assert_eq!(first, fs::read_to_string(again).unwrap());
    assert_eq!(first.lines().count(), 101);
}

#[test]
fn simulate_smoke_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str, threads: &str| {
        let out = dir.path().join(sub);
        let o = smc(&[
            "--quiet",
            "simulate",
            "--preset",
            "toy-A",
            "--mcar-grid",
            "0.05:0.05:0.05",
            "--replicates",
            "2",
            "--seed",
            "7",
            "--threads",
            threads,
            "--plot",
            "--output",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        out
    };
    let a = run("a", "1");
    let b = run("b", "2");
    let reps = fs::read_to_string(a.join("replicates.csv")).unwrap();
    assert_eq!(reps.lines().count(), 1 + 2 * 2);
    for f in ["replicates.csv", "aggregates.csv", "toy-A.svg"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert!(a.join("timings.csv").exists());
}

#[test]
fn unknown_preset_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = smc(&["simulate", "--preset", "toy-Z", "--replicates", "1", "--output", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_logs_are_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "x.csv", "a,b\n1,2\n3,NA\n5,6\n");
    let o = smc(&["--json-logs", "complete", "--input", &input, "--method", "lrmc", "--lambda", "0.5", "--output", dir.path().join("f").to_str().unwrap()]);
    assert!(o.status.success());
    let text = stderr(&o);
    assert!(!text.is_empty());
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(v["level"].is_string() && v["message"].is_string());
    }
}

#[test]
fn generate_writes_dataset_files() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("d");
    let o = smc(&["generate", "--preset", "high-B", "--mcar", "0.3", "--seed", "5", "--output", prefix.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let x = fs::read_to_string(dir.path().join("d.csv")).unwrap();
    assert_eq!(x.lines().next().unwrap().split(',').count(), 12);
    assert_eq!(x.lines().count(), 401);
    assert!(x.contains("NA"));
    let coords = fs::read_to_string(dir.path().join("d.new-coords.csv")).unwrap();
    assert!(coords.starts_with("s1,s2\n"));
}
