//! End-to-end runs of the `marketstates` binary on the sample dataset.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use marketstates::manifest::{scan_outputs, RunManifest, StageStatus};

fn sample_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sample")
}

/// Copies the sample inputs into `dir` and writes a configuration whose
/// output directory is `dir/out`. Returns the configuration path.
fn sample_setup(dir: &Path, robustness: bool) -> PathBuf {
    for name in ["prices.csv", "sectors.csv", "events_example.csv"] {
        fs::copy(sample_dir().join(name), dir.join(name)).unwrap();
    }
    let text = fs::read_to_string(sample_dir().join("sample.toml"))
        .unwrap()
        .replace("output = \"../../out/sample\"", "output = \"out\"")
        .replace("enabled = true", &format!("enabled = {robustness}"));
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn marketstates(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_marketstates"))
        .args(args)
        .env_remove("MARKETSTATES_OUTPUT_DIR")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("process exited normally")
}

#[test]
fn full_run_lists_every_output_in_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = sample_setup(dir.path(), true);
    let out = marketstates(&["run", "-c", config.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let root = dir.path().join("out");
    let manifest = RunManifest::load(&root).unwrap().expect("manifest written");
    assert_eq!(manifest.files(), scan_outputs(&root).unwrap());
    assert_eq!(manifest.stages.len(), 7);
    assert!(manifest.stages.iter().all(|s| s.status == StageStatus::Ok));
    assert!(root.join("summary.json").exists());
    assert!(root.join("reduced_corr/ari_summary.csv").exists());
    assert!(root.join("reduced_corr/figures/ari.svg").exists());
}

#[test]
fn disabled_robustness_writes_no_ari_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = sample_setup(dir.path(), false);
    let out = marketstates(&["run", "-c", config.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let root = dir.path().join("out");
    let manifest = RunManifest::load(&root).unwrap().unwrap();
    assert_eq!(manifest.stage("robustness").unwrap().status, StageStatus::Skipped);
    let files = scan_outputs(&root).unwrap();
    assert!(files.iter().all(|f| !f.contains("ari")), "{files:?}");
}

#[test]
fn stages_can_be_run_one_at_a_time() {
    let dir = tempfile::tempdir().unwrap();
    let config = sample_setup(dir.path(), false);
    let c = config.to_str().unwrap();
    for stage in ["ingest", "matrices", "cluster", "select-k", "analyze"] {
        let out = marketstates(&[stage, "-c", c]);
        assert_eq!(code(&out), 0, "{stage}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let root = dir.path().join("out");
    assert!(root.join("standard/timeline.csv").exists());
    assert!(!root.join("standard/figures").exists());
}

#[test]
fn missing_prerequisite_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = sample_setup(dir.path(), false);
    let c = config.to_str().unwrap();
    assert_eq!(code(&marketstates(&["cluster", "-c", c])), 1);
    assert_eq!(code(&marketstates(&["ingest", "-c", c])), 0);
    assert_eq!(code(&marketstates(&["cluster", "-c", c])), 1);
}

#[test]
fn changed_configuration_is_rejected_when_resuming() {
    let dir = tempfile::tempdir().unwrap();
    let config = sample_setup(dir.path(), false);
    let c = config.to_str().unwrap();
    assert_eq!(code(&marketstates(&["ingest", "-c", c])), 0);
    let out = marketstates(&["matrices", "-c", c, "--epochs.length=20"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration differs"));
}

#[test]
fn missing_price_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = sample_setup(dir.path(), false);
    fs::remove_file(dir.path().join("prices.csv")).unwrap();
    let out = marketstates(&["ingest", "-c", config.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn invalid_values_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = sample_setup(dir.path(), false);
    let c = config.to_str().unwrap();
    assert_eq!(code(&marketstates(&["ingest", "-c", c, "--epochs.length=1"])), 1);
    assert_eq!(code(&marketstates(&["ingest", "-c", "does-not-exist.toml"])), 1);
    assert_eq!(code(&marketstates(&["no-such-command"])), 1);
    assert_eq!(code(&marketstates(&["--help"])), 0);
}

#[test]
fn heatmap_command_draws_a_typical_state() {
    let dir = tempfile::tempdir().unwrap();
    let config = sample_setup(dir.path(), false);
    let out = marketstates(&["run", "-c", config.to_str().unwrap()]);
    assert_eq!(code(&out), 0);

    let root = dir.path().join("out");
    let svg = dir.path().join("state.svg");
    let out = marketstates(&[
        "heatmap",
        root.join("reduced_corr/typical_states/state_1.csv").to_str().unwrap(),
        "-o",
        svg.to_str().unwrap(),
        "--tickers",
        root.join("ingest/tickers.csv").to_str().unwrap(),
        "--title",
        "state 1",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") || text.starts_with("<?xml"));

    let from_container = dir.path().join("record.svg");
    let out = marketstates(&[
        "heatmap",
        root.join("standard/matrices.msmx").to_str().unwrap(),
        "-o",
        from_container.to_str().unwrap(),
        "--record",
        "2",
        "--bound",
        "1",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let missing = marketstates(&[
        "heatmap",
        root.join("standard/matrices.msmx").to_str().unwrap(),
        "-o",
        from_container.to_str().unwrap(),
        "--record",
        "999",
    ]);
    assert_eq!(code(&missing), 2);
}
