use std::path::Path;
use std::process::Command;

use halfplane_hm::report::MEASURE_COLUMNS;

fn hh(out: &Path, args: &[&str]) -> (i32, String, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_hh"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("HH_SEED")
        .env_remove("HH_THREADS")
        .output()
        .expect("binary runs");
    (
        o.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&o.stdout).into_owned(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

#[test]
fn passing_check_exits_zero_and_writes_evidence() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = hh(dir.path(), &["check", "reflection", "--n", "2..4"]);
    assert_eq!(code, 0, "{stdout}");
    assert!(dir.path().join("checks/reflection.json").exists());
    assert!(dir.path().join("checks/reflection.csv").exists());
    let (code, stdout, _) = hh(dir.path(), &["report"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("reflection"));
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = hh(
        dir.path(),
        &["check", "flatness", "--n", "16,32,64", "--delta", "0.1"],
    );
    assert_eq!(code, 1, "{stdout}");
}

#[test]
fn bad_input_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = hh(dir.path(), &["check", "no-such-check"]);
    assert_eq!(code, 3);
    assert!(stderr.starts_with("error:"));
    let (code, _, _) = hh(
        dir.path(),
        &[
            "stationary",
            "--set",
            r#"{"kind":"L0"}"#,
            "--x",
            "0,5",
            "--m",
            "4",
        ],
    );
    assert_eq!(code, 3);
}

#[test]
fn measure_table_has_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, stderr) = hh(
        dir.path(),
        &[
            "stationary",
            "--set",
            r#"{"kind":"L0"}"#,
            "--x",
            "0,0",
            "--m",
            "4",
        ],
    );
    assert_eq!(code, 0, "{stdout}{stderr}");
    let text = std::fs::read_to_string(dir.path().join("stationary.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), MEASURE_COLUMNS.join(","));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let v: f64 = row[6].parse().unwrap();
    assert!((v - 1.0).abs() < 1e-9);
}
