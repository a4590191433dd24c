//! End-to-end subcommand behavior: artifact presence, exit codes, error
//! lines, flag overrides and chained stages. A small reservoir keeps these
//! fast; the full-size benchmark lives in the acceptance suite.

use std::path::Path;
use std::process::Command;

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_resmpc"))
}

fn write_small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("small.conf");
    std::fs::write(&path, "reservoir_size = 60\n").unwrap();
    path
}

#[test]
fn full_writes_every_artifact_and_report_renders() {
    let tmp = TempDir::new().unwrap();
    let config = write_small_config(tmp.path());
    let out = tmp.path().join("out");

    let status = bin()
        .args(["full", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    for name in resmpc_cli::commands::full_artifacts() {
        assert!(out.join(name).exists(), "missing artifact {name}");
    }

    let status = bin()
        .args(["report", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("fig4.svg").exists());
    assert!(out.join("fig5.svg").exists());
    let svg = std::fs::read_to_string(out.join("fig4.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn stages_chain_one_by_one() {
    let tmp = TempDir::new().unwrap();
    let config = write_small_config(tmp.path());
    let out = tmp.path().join("out");
    for (args, artifact) in [
        (vec!["collect"], "dataset.csv"),
        (vec!["train"], "esn_weights.json"),
        (vec!["run"], "compensated_run.csv"),
        (vec!["predict"], "prediction.csv"),
    ] {
        let status = bin()
            .args(&args)
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success(), "stage {args:?} failed");
        assert!(out.join(artifact).exists(), "{artifact} missing");
    }
}

#[test]
fn run_without_weights_fails_naming_the_file() {
    let tmp = TempDir::new().unwrap();
    let config = write_small_config(tmp.path());
    let out = tmp.path().join("out");
    let output = bin()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "stderr: {stderr}");
    assert!(stderr.contains("esn_weights.json"), "stderr: {stderr}");
}

#[test]
fn report_with_missing_csv_fails_naming_the_file() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    std::fs::create_dir_all(&out).unwrap();
    let output = bin().arg("report").arg("--out").arg(&out).output().unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "stderr: {stderr}");
    assert!(stderr.contains("nominal_run.csv"), "stderr: {stderr}");
}

#[test]
fn invalid_config_fails_with_one_line_naming_the_key() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("bad.conf");
    std::fs::write(&config, "leak_rate = 1.5\n").unwrap();
    let output = bin()
        .args(["collect", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "stderr: {stderr}");
    assert!(stderr.contains("leak_rate"), "stderr: {stderr}");
}

#[test]
fn washout_flag_overrides_config() {
    let tmp = TempDir::new().unwrap();
    let config = write_small_config(tmp.path());
    let out = tmp.path().join("out");
    for (args, expect) in [
        (vec!["collect"], None),
        (vec!["train", "--washout", "10"], Some("\"washout\": 10")),
    ] {
        let status = bin()
            .args(&args)
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        if let Some(needle) = expect {
            let report = std::fs::read_to_string(out.join("training_report.json")).unwrap();
            assert!(report.contains(needle), "report: {report}");
        }
    }
}

#[test]
fn seed_flag_changes_the_drawn_weights() {
    let tmp = TempDir::new().unwrap();
    let config = write_small_config(tmp.path());
    let mut weights = Vec::new();
    for seed in ["1", "2"] {
        let out = tmp.path().join(format!("out{seed}"));
        let status = bin()
            .args(["full", "--seed", seed, "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        weights.push(std::fs::read_to_string(out.join("esn_weights.json")).unwrap());
    }
    assert_ne!(weights[0], weights[1]);
}

#[test]
fn small_full_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let config = write_small_config(tmp.path());
    let mut snapshots: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for sub in ["a", "b"] {
        let out = tmp.path().join(sub);
        let status = bin()
            .args(["full", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        snapshots.push(
            resmpc_cli::commands::full_artifacts()
                .iter()
                .map(|name| (name.to_string(), std::fs::read(out.join(name)).unwrap()))
                .collect(),
        );
    }
    for ((name, a), (_, b)) in snapshots[0].iter().zip(&snapshots[1]) {
        assert_eq!(a, b, "artifact {name} differs between identical runs");
    }
}
