//! End-to-end runs of the command-line interface in temporary directories.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn fixture_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/root")
}

/// Runs the CLI in-process and returns what it printed.
fn run(out: &Path, args: &[&str]) -> trajpred::Result<String> {
    let mut argv = vec!["trajpred".to_string(), "--out".into(), out.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let mut buf = Vec::new();
    trajpred::cli::run(argv, &mut buf)?;
    Ok(String::from_utf8(buf).unwrap())
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn prepare_counts_fixture_scenes() {
    let dir = tempfile::tempdir().unwrap();
    let root = fixture_root();
    let text = run(dir.path(), &["--dataset-root", root.to_str().unwrap(), "prepare"]).unwrap();
    assert!(text.contains("eth_fixture: 6 scenes"), "{text}");
    assert!(text.contains("sdd_fixture: 4 scenes (px)"), "{text}");
    assert!(text.contains("total: 14 scenes"), "{text}");
    let first = std::fs::read(dir.path().join("scenes.json")).unwrap();

    run(dir.path(), &["--dataset-root", root.to_str().unwrap(), "prepare"]).unwrap();
    assert_eq!(std::fs::read(dir.path().join("scenes.json")).unwrap(), first);
    assert!(dir.path().join("run_prepare.json").exists());
}

#[test]
fn prepare_rejects_an_empty_root() {
    let dir = tempfile::tempdir().unwrap();
    let empty = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["--dataset-root", empty.path().to_str().unwrap(), "prepare"]).is_err());
    assert!(run(dir.path(), &["prepare"]).is_err());
}

#[test]
fn baseline_is_exact_on_straight_lines() {
    let dir = tempfile::tempdir().unwrap();
    run(dir.path(), &["prepare", "--synthetic", "20", "--curved-fraction", "0"]).unwrap();
    run(dir.path(), &["baseline"]).unwrap();
    let metrics = json(&dir.path().join("metrics.json"));
    assert!(metrics["mean_ade"].as_f64().unwrap() < 1e-9);
    assert!(metrics["mean_fde"].as_f64().unwrap() < 1e-9);
    let table = std::fs::read_to_string(dir.path().join("metrics.md")).unwrap();
    assert!(table.contains("| Method |"), "{table}");
}

#[test]
fn train_eval_plot_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    run(dir.path(), &["--seed", "3", "prepare", "--synthetic", "6", "--synthetic-sets", "2"]).unwrap();

    // Zero epochs writes the initialization.
    run(dir.path(), &["--seed", "3", "--split", "loocv", "train", "--epochs", "0"]).unwrap();
    for fold in ["synthetic0", "synthetic1"] {
        assert!(dir.path().join(fold).join("model.ckpt").exists());
        assert!(dir.path().join(fold).join("train_report.json").exists());
    }

    run(dir.path(), &["--split", "loocv", "train", "--epochs", "2"]).unwrap();
    let progress = std::fs::read_to_string(dir.path().join("synthetic0/progress.jsonl")).unwrap();
    assert_eq!(progress.lines().count(), 2);

    let text = run(dir.path(), &["--split", "loocv", "eval", "--checkpoint", dir.path().to_str().unwrap()]).unwrap();
    assert!(!text.is_empty());
    let metrics = json(&dir.path().join("metrics.json"));
    assert_eq!(metrics["folds"].as_array().unwrap().len(), 2);
    assert!(metrics["mean_ade"].as_f64().unwrap().is_finite());

    let metrics_path = dir.path().join("metrics.json");
    let ckpt = dir.path().join("synthetic0/model.ckpt");
    run(
        dir.path(),
        &[
            "--split",
            "loocv",
            "plot",
            "--metrics",
            metrics_path.to_str().unwrap(),
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--overlays",
            "2",
        ],
    )
    .unwrap();
    assert!(dir.path().join("error_distribution.png").exists());
    assert!(dir.path().join("overlay_000.png").exists());
}

#[test]
fn gradcheck_passes_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let text = run(dir.path(), &["gradcheck", "--probes", "60"]).unwrap();
    assert!(text.starts_with("max_rel_err"), "{text}");
    let report = json(&dir.path().join("gradcheck.json"));
    assert!(report["max_rel_err"].as_f64().unwrap() < 1e-4);
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_trajpred");
    let dir = tempfile::tempdir().unwrap();
    let help = Command::new(exe).arg("--help").output().unwrap();
    assert!(help.status.success());
    assert!(String::from_utf8_lossy(&help.stdout).contains("gradcheck"));

    let bad = Command::new(exe)
        .args(["--out", dir.path().to_str().unwrap(), "eval", "--checkpoint", "/nonexistent.ckpt"])
        .env_remove("TRAJPRED_CACHE")
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("error:"));
}
