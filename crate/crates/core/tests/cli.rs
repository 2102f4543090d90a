//! End-to-end runs of the `pushd` binary.

use std::path::Path;
use std::process::{Command, Output};

const TOGGLE: &str = "aag 1 0 1 1 0\n2 3\n2\n";
const AND_INPUT: &str = "aag 3 1 1 1 1\n2\n4 6\n4\n6 4 2\n";
const STUCK: &str = "aag 1 0 1 1 0\n2 2\n2\n";

fn pushd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pushd")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn unsafe_exit_and_witness_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "toggle.aag", TOGGLE);
    let witness = dir.path().join("w.txt");
    let o = pushd(&["check", &file, "--witness", witness.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(10));
    assert_eq!(stdout(&o), "1\nb0\n0\n\n\n.\n");
    assert_eq!(std::fs::read_to_string(&witness).unwrap(), stdout(&o));
}

#[test]
fn safe_exit_invariant_and_cnf() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "and.aag", AND_INPUT);
    let inv = dir.path().join("inv.txt");
    let cnf = dir.path().join("t.cnf");
    for mode in ["none", "iteration", "triggered"] {
        let o = pushd(&[
            "check",
            &file,
            "--mode",
            mode,
            "--invariant",
            inv.to_str().unwrap(),
            "--dump-cnf",
            cnf.to_str().unwrap(),
            "--stats",
            "json",
        ]);
        assert_eq!(o.status.code(), Some(20), "{mode}");
        assert_eq!(stdout(&o), "0\nb0\n.\n");
        assert_eq!(std::fs::read_to_string(&inv).unwrap(), "-2 0\n");
        let stats: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
        assert!(stats.is_object());
    }
    let dimacs = std::fs::read_to_string(&cnf).unwrap();
    assert!(dimacs.lines().any(|l| l.starts_with("p cnf ")), "{dimacs}");
}

#[test]
fn unknown_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "and.aag", AND_INPUT);
    let o = pushd(&["check", &file, "--max-frames", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "unknown\n");

    let o = pushd(&["check", &file, "--mode", "iteration", "--wdm"]);
    assert_eq!(o.status.code(), Some(1));
    let o = pushd(&["check", dir.path().join("missing.aag").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let bad = write(dir.path(), "bad.aag", "aag 1 0 1 1\n");
    assert_eq!(pushd(&["check", &bad]).status.code(), Some(1));
    assert_eq!(pushd(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn bench_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = pushd(&["bench", dir.path().to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 0);

    write(dir.path(), "toggle.aag", TOGGLE);
    write(dir.path(), "and.aag", AND_INPUT);
    write(dir.path(), "stuck.aag", STUCK);
    let o = pushd(&["bench", dir.path().to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 12);
    for r in rows {
        let expected = match r["file"].as_str().unwrap() {
            "toggle.aag" => "unsafe",
            _ => "safe",
        };
        assert_eq!(r["verdict"], expected, "{r}");
    }
    assert_eq!(report["inconsistent"].as_array().unwrap().len(), 0);
    assert_eq!(report["summary"].as_array().unwrap().len(), 4);

    let o = pushd(&["bench", dir.path().to_str().unwrap(), "--modes", "none,triggered-wdm"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("triggered-wdm"));
}
