use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sample() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("samples/generator.toml")
}

fn fmeca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmeca"))
        .args(args)
        .env_remove("FMECA_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_accepts_the_samples() {
    let out = fmeca(&["validate", path(&sample())]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = sample().with_extension("csv");
    assert_eq!(fmeca(&["validate", path(&csv)]).status.code(), Some(0));
}

#[test]
fn invalid_models_exit_one_with_positions() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(sample())
        .unwrap()
        .replace("occurrence = 2", "occurrence = 9");
    std::fs::write(&bad, text).unwrap();
    let out = fmeca(&["validate", path(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("rank-out-of-scale"), "{err}");
    assert!(err.contains("bad.toml:"), "{err}");
}

#[test]
fn usage_and_io_errors_exit_two() {
    assert_eq!(fmeca(&["validate", "/nonexistent/model.toml"]).status.code(), Some(2));
    assert_eq!(fmeca(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        fmeca(&["solve", path(&sample()), "--max-rounds", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        fmeca(&["solve", path(&sample()), "--budget-override", "-3"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn solve_oracle_compare_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.toml");
    let oracle = dir.path().join("o.toml");
    let gap = dir.path().join("g.toml");
    let trace = dir.path().join("t.jsonl");

    let out = fmeca(&[
        "solve",
        path(&sample()),
        "-o",
        path(&report),
        "--trace-out",
        path(&trace),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("converged"));
    let out = fmeca(&["oracle", path(&sample()), "-o", path(&oracle)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = fmeca(&["compare", path(&report), path(&oracle), "-o", path(&gap)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(std::fs::read_to_string(&gap).unwrap().contains("verdict = \"OPTIMAL\""));
    assert!(!std::fs::read_to_string(&trace).unwrap().is_empty());

    let out = fmeca(&["report", path(&report), "--model", path(&sample())]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("Failure1"));
}

#[test]
fn report_against_wrong_model_fails() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.toml");
    let out = fmeca(&["solve", path(&sample()), "--budget-override", "30", "-o", path(&report)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = fmeca(&["report", path(&report), "--model", path(&sample())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("not"), "{}", stderr(&out));
}

#[test]
fn infeasible_budget_exits_one() {
    let out = fmeca(&["solve", path(&sample()), "--budget-override", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("feasible = false"));
}

#[test]
fn default_output_directory_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fmeca"))
        .args(["solve", path(&sample()), "--format", "human"])
        .env("FMECA_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    assert!(dir.path().join("generator.report.txt").exists());
}

#[test]
fn gen_is_reproducible_and_valid() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let args = [
        "gen",
        "--failure-modes",
        "4",
        "--actions",
        "7",
        "--seed",
        "5",
        "--feasible",
        "--format",
        "tabular",
    ];
    let first = fmeca(&args);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert_eq!(fmeca(&args).stdout, first.stdout);
    std::fs::write(&a, &first.stdout).unwrap();
    assert_eq!(fmeca(&["validate", path(&a)]).status.code(), Some(0));
    assert_eq!(fmeca(&["gen", "--actions", "0"]).status.code(), Some(2));
}

#[test]
fn stdin_is_accepted() {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_fmeca"))
        .args(["validate", "-"])
        .env_remove("FMECA_OUTPUT_DIR")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(&std::fs::read(sample()).unwrap())
        .unwrap();
    assert_eq!(child.wait_with_output().unwrap().status.code(), Some(0));
}
