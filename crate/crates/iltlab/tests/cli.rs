//! End-to-end smoke tests of the `iltlab` binary: determinism across worker
//! counts, exit codes, output formats, and persisted artifacts.

use std::path::Path;
use std::process::{Command, Output};

fn iltlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iltlab"))
        .args(args)
        .env_remove("ILTLAB_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn read_artifact(dir: &Path, stem: &str, ext: &str) -> String {
    std::fs::read_to_string(dir.join(format!("{stem}.{ext}"))).unwrap()
}

#[test]
fn worker_count_does_not_change_results() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let common = [
        "fit", "--steps", "4096", "--replicates", "2000", "--seed", "5", "--format", "flat",
    ];
    let run = |dir: &Path, workers: &str| {
        let mut args: Vec<&str> = common.to_vec();
        args.extend_from_slice(&["--workers", workers, "--out", dir.to_str().unwrap()]);
        iltlab(&args)
    };
    let a = run(d1.path(), "1");
    let b = run(d2.path(), "4");
    assert!(a.status.success() && b.status.success());
    assert_eq!(stdout(&a), stdout(&b), "stdout differs across worker counts");
    assert_eq!(
        read_artifact(d1.path(), "fit-5", "csv"),
        read_artifact(d2.path(), "fit-5", "csv"),
        "CSV artifact differs across worker counts"
    );
}

#[test]
fn flat_format_has_seven_columns() {
    let out = iltlab(&[
        "small-dev", "--steps", "4096", "--replicates", "2000", "--seed", "7", "--format", "flat",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "x,count,replicates,p_hat,ci_low,ci_high,flag"
    );
    let mut rows = 0;
    for line in lines {
        assert_eq!(line.split(',').count(), 7, "row: {line}");
        rows += 1;
    }
    assert_eq!(rows, 12, "one row per grid epsilon");
}

#[test]
fn config_file_round_trip_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(
        &cfg_path,
        r#"{"master_seed": 11, "replicates": 2000, "n_steps": 4096}"#,
    )
    .unwrap();
    let from_file = iltlab(&[
        "fit", "--config", cfg_path.to_str().unwrap(), "--format", "flat",
    ]);
    let from_flags = iltlab(&[
        "fit", "--seed", "11", "--replicates", "2000", "--steps", "4096", "--format", "flat",
    ]);
    assert!(from_file.status.success() && from_flags.status.success());
    assert_eq!(stdout(&from_file), stdout(&from_flags));

    // A flag overrides the same field from the file.
    let overridden = iltlab(&[
        "fit", "--config", cfg_path.to_str().unwrap(), "--seed", "12", "--format", "flat",
    ]);
    assert!(overridden.status.success());
    assert_ne!(stdout(&overridden), stdout(&from_file));
}

#[test]
fn saved_json_embeds_full_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = iltlab(&[
        "fit", "--steps", "4096", "--replicates", "2000", "--seed", "9", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let json = read_artifact(dir.path(), "fit-9", "json");
    let record: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(record["experiment"], "fit");
    assert_eq!(record["config"]["master_seed"], 9);
    assert_eq!(record["config"]["n_steps"], 4096);
    assert_eq!(record["payload"]["kind"], "curve_with_fit");
}

#[test]
fn configuration_errors_exit_2() {
    // Unknown config field.
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"bogus_field": 1}"#).unwrap();
    let out = iltlab(&["fit", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // Unknown report format.
    let out = iltlab(&["fit", "--replicates", "2000", "--format", "bogus"]);
    assert_eq!(out.status.code(), Some(2));

    // Unknown oracle query.
    let out = iltlab(&["oracle", "no-such-query", "1"]);
    assert_eq!(out.status.code(), Some(2));

    // Invalid config values.
    let out = iltlab(&["fit", "--replicates", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn degenerate_experiment_exits_3() {
    // Every grid epsilon below the estimator floor at this coarse dt.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("degenerate.json");
    std::fs::write(
        &cfg,
        r#"{"n_steps": 64, "replicates": 1000, "eps_min": 1e-6, "eps_max": 1e-5}"#,
    )
    .unwrap();
    let out = iltlab(&["small-dev", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn oracle_queries_print_scalars() {
    let out = iltlab(&["oracle", "no-intersection", "1"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("6.2500000000000000e-1"), "{}", stdout(&out));

    let out = iltlab(&["oracle", "reflection", "1", "1"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("6.826894921370"), "{}", stdout(&out));

    let out = iltlab(&["oracle", "tau1-mean"]);
    assert!(out.status.success());
    let line = stdout(&out);
    let value: f64 = line
        .lines()
        .find_map(|l| l.strip_prefix("tau1-mean = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((value - 1.0).abs() < 1e-6);
}

#[test]
fn validate_subcommand_all_pass() {
    let out = iltlab(&["validate", "--seed", "3"]);
    assert!(out.status.success(), "validate exited nonzero");
    let text = stdout(&out);
    assert!(text.lines().filter(|l| l.starts_with("PASS ")).count() >= 10);
    assert!(!text.contains("FAIL"), "{text}");
}
