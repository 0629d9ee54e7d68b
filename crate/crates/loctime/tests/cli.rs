//! End-to-end checks of the `loctime` binary: exit-code contract,
//! config/flag precedence, report merging, and byte-identical numeric
//! outputs when re-running with the same seed.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_loctime"))
}

fn run_small(dir: &Path, seed: u64) -> std::process::Output {
    bin()
        .args([
            "run",
            "--experiment",
            "identities",
            "--seed",
            &seed.to_string(),
            "--out",
            dir.to_str().unwrap(),
            "--set",
            "reps=40",
            "--set",
            "n_upward=20",
            "--set",
            "k_max=5",
        ])
        .output()
        .unwrap()
}

#[test]
fn run_exits_zero_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_small(dir.path(), 9);
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    assert!(dir.path().join("manifest.json").exists());
    assert!(dir.path().join("identities-results.json").exists());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("result: PASS"));
}

#[test]
fn rerun_with_same_seed_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_small(a.path(), 41);
    run_small(b.path(), 41);
    let ra = std::fs::read(a.path().join("identities-results.json")).unwrap();
    let rb = std::fs::read(b.path().join("identities-results.json")).unwrap();
    assert_eq!(ra, rb);
}

#[test]
fn usage_errors_exit_two() {
    // unknown experiment
    let out = bin()
        .args(["run", "--experiment", "nonsense"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // missing everything
    let out = bin().args(["run"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    // malformed --set
    let out = bin()
        .args(["run", "--experiment", "lil", "--set", "oops"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // report over an empty directory
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["report", "--in", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("exp.conf");
    std::fs::write(
        &cfg_path,
        "experiment = identities\nseed = 5\nreps = 30\nn_upward = 10\nk_max = 3\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = bin()
        .args([
            "run",
            "--config",
            cfg_path.to_str().unwrap(),
            "--seed",
            "77", // flag wins over the file
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    let manifest = std::fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 77"));

    // report merges the directory, both formats
    let rep = bin()
        .args(["report", "--in", out_dir.to_str().unwrap(), "--format", "csv"])
        .output()
        .unwrap();
    assert_eq!(rep.status.code(), Some(0));
    let text = String::from_utf8(rep.stdout).unwrap();
    assert!(text.starts_with("experiment,metric,value,pass"));
    let rep = bin()
        .args(["report", "--in", out_dir.to_str().unwrap(), "--format", "json"])
        .output()
        .unwrap();
    assert_eq!(rep.status.code(), Some(0));
    let parsed: serde_json::Value = serde_json::from_slice(&rep.stdout).unwrap();
    assert_eq!(parsed[0]["hard_pass"], true);
}

#[test]
fn zero_replications_is_an_empty_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "run",
            "--experiment",
            "audits",
            "--out",
            dir.path().to_str().unwrap(),
            "--set",
            "reps=0",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
}
