//! End-to-end tests driving the compiled `freqrise` binary through the
//! full pipeline on a miniature benchmark: generate, train, explain,
//! evaluate, sweep. Kept small so the whole file runs in seconds.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use freqrise_core::metrics::EvalReport;
use freqrise_core::models::{BlackBoxModel, MlpModel};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_freqrise")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("not killed by signal")
}

/// Writes the shared miniature benchmark config: 4 classes over
/// components {3, 7}, 64-sample signals.
fn write_tiny_config(dir: &Path) -> PathBuf {
    let path = dir.join("tiny.json");
    std::fs::write(
        &path,
        r#"{
  "synthetic": {
    "length": 64,
    "sigma": 0.02,
    "components": [3, 7],
    "sinusoids_range": [3, 8],
    "distractor_band": [1, 30],
    "amplitude": 1.0
  },
  "count": 8,
  "seed": 11
}"#,
    )
    .unwrap();
    path
}

fn gen_tiny(dir: &Path, output: &str) {
    write_tiny_config(dir);
    assert_ok(&run(dir, &["gen-data", "--config", "tiny.json", "--output", output]));
}

#[test]
fn gen_data_is_deterministic_and_respects_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    write_tiny_config(dir);
    assert_ok(&run(dir, &["gen-data", "--config", "tiny.json", "--output", "a.bin"]));
    assert_ok(&run(dir, &["gen-data", "--config", "tiny.json", "--output", "b.bin"]));
    assert_eq!(std::fs::read(dir.join("a.bin")).unwrap(), std::fs::read(dir.join("b.bin")).unwrap());
    assert_eq!(
        std::fs::read(dir.join("a.bin.json")).unwrap(),
        std::fs::read(dir.join("b.bin.json")).unwrap()
    );

    // A flag override wins over the config file and lands in the sidecar.
    assert_ok(&run(
        dir,
        &["gen-data", "--config", "tiny.json", "--output", "c.bin", "--count", "4"],
    ));
    let sidecar = std::fs::read_to_string(dir.join("c.bin.json")).unwrap();
    assert!(sidecar.contains("\"count\": 4"), "{sidecar}");
    // Different content means a different digest tag.
    assert_ne!(sidecar, std::fs::read_to_string(dir.join("a.bin.json")).unwrap());
}

#[test]
fn invalid_sigma_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["gen-data", "--output", "x.bin", "--sigma", "-1"]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma"));
}

#[test]
fn overwrite_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    gen_tiny(dir, "data.bin");
    let out = run(dir, &["gen-data", "--config", "tiny.json", "--output", "data.bin"]);
    assert_eq!(exit_code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--force"));
    assert_ok(&run(dir, &["gen-data", "--config", "tiny.json", "--output", "data.bin", "--force"]));
}

#[test]
fn explain_writes_maps_with_digest_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    gen_tiny(dir, "data.bin");
    assert_ok(&run(
        dir,
        &[
            "explain", "--data", "data.bin", "--model", "oracle", "--output-dir", "maps",
            "--n-masks", "400", "--seed", "5",
        ],
    ));
    // 64-sample signals give 33 spectrum bins, one CSV line each.
    let csv = std::fs::read_to_string(dir.join("maps/sample_00000.csv")).unwrap();
    assert_eq!(csv.lines().count(), 33);
    assert!(dir.join("maps/sample_00007.csv").exists());
    assert!(!dir.join("maps/sample_00008.csv").exists());

    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("maps/sample_00003.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["domain"], "frequency");
    assert_eq!(sidecar["n_masks"], 400);
    assert_eq!(sidecar["tag"].as_str().unwrap().len(), 64);
    // Per-sample seeds differ even though the run seed is shared.
    let other: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("maps/sample_00004.json")).unwrap())
            .unwrap();
    assert_ne!(sidecar["seed"], other["seed"]);
}

#[test]
fn evaluate_scores_maps_against_baselines() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    gen_tiny(dir, "data.bin");
    assert_ok(&run(
        dir,
        &[
            "explain", "--data", "data.bin", "--model", "oracle", "--output-dir", "maps",
            "--n-masks", "400", "--seed", "5",
        ],
    ));
    let out = run(
        dir,
        &[
            "evaluate", "--data", "data.bin", "--model", "oracle", "--maps", "maps",
            "--output-dir", "eval", "--schedule", "0.05,0.1,0.25,0.5,1.0", "--postprocess", "0.9",
            "--with-baselines",
        ],
    );
    assert_ok(&out);

    let report: EvalReport =
        serde_json::from_str(&std::fs::read_to_string(dir.join("eval/report.json")).unwrap())
            .unwrap();
    assert_eq!(report.methods.len(), 4);
    let by_name = |name: &str| report.methods.iter().find(|m| m.method == name).unwrap();
    let freqrise = by_name("freqrise");
    let random = by_name("random");
    // The oracle's detector bins are exactly the components, so the
    // estimator nails localization while random guessing does not.
    assert!(freqrise.rank_accuracy.unwrap() >= 0.9);
    assert!(random.rank_accuracy.unwrap() <= 0.5);
    // Deleting what the map flags hurts more than deleting at random.
    assert!(freqrise.faithfulness_auc.unwrap() < random.faithfulness_auc.unwrap());
    // Quantile suppression concentrates the maps.
    assert!(by_name("freqrise-q0.9").complexity.unwrap() < freqrise.complexity.unwrap());

    for name in ["freqrise", "freqrise-q0.9", "amplitude", "random"] {
        assert!(dir.join(format!("eval/curve_{name}.csv")).exists());
    }
    assert!(std::fs::read_to_string(dir.join("eval/deletion.svg")).unwrap().contains("<polyline"));
    let csv = std::fs::read_to_string(dir.join("eval/report.csv")).unwrap();
    assert!(csv.starts_with("method,domain,metric,value\n"));
    assert!(csv.contains("freqrise,frequency,rank_accuracy,"));
}

#[test]
fn evaluate_without_maps_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    gen_tiny(dir, "data.bin");
    std::fs::create_dir(dir.join("empty")).unwrap();
    let out = run(
        dir,
        &[
            "evaluate", "--data", "data.bin", "--model", "oracle", "--maps", "empty",
            "--output-dir", "eval",
        ],
    );
    assert_eq!(exit_code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no relevance maps"));
}

#[test]
fn missing_dataset_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["explain", "--data", "nope.bin", "--model", "oracle", "--output-dir", "maps"],
    );
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn train_saves_a_loadable_tagged_model() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    write_tiny_config(dir);
    assert_ok(&run(
        dir,
        &[
            "gen-data", "--config", "tiny.json", "--output", "train.bin", "--count", "64",
            "--seed", "21",
        ],
    ));
    gen_tiny(dir, "test.bin");
    let out = run(
        dir,
        &[
            "train", "--data", "train.bin", "--test-data", "test.bin", "--output", "model.bin",
            "--epochs", "2", "--batch-size", "16", "--seed", "3",
        ],
    );
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("epoch 2/2"), "{stdout}");
    assert!(stdout.contains("test accuracy"), "{stdout}");

    let (model, tag) = MlpModel::load(&dir.join("model.bin")).unwrap();
    assert_eq!(model.widths(), vec![64, 64, 64, 64, 4]);
    assert_eq!(tag.unwrap().len(), 64);
}

#[test]
fn zero_epochs_saves_the_untrained_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    gen_tiny(dir, "data.bin");
    assert_ok(&run(
        dir,
        &["train", "--data", "data.bin", "--output", "init.bin", "--epochs", "0", "--seed", "9"],
    ));
    let (model, _) = MlpModel::load(&dir.join("init.bin")).unwrap();
    let reference = MlpModel::standard(64, 4, 9).unwrap();
    // No updates ran, so the file holds exactly the seeded initialization.
    let x = freqrise_core::ndarray::Array2::from_shape_fn((1, 64), |(_, j)| (j as f64).sin());
    let a = model.predict_batch(x.view()).unwrap();
    let b = reference.predict_batch(x.view()).unwrap();
    assert_eq!(a[0].logits(), b[0].logits());
}

#[test]
fn sweep_dedupes_quantiles_and_writes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    gen_tiny(dir, "data.bin");
    assert_ok(&run(
        dir,
        &[
            "explain", "--data", "data.bin", "--model", "oracle", "--output-dir", "maps",
            "--n-masks", "200", "--limit", "4",
        ],
    ));
    let out = run(
        dir,
        &[
            "sweep-postprocess", "--data", "data.bin", "--model", "oracle", "--maps", "maps",
            "--quantiles", "0.9,0.5,0.9", "--schedule", "0.1,0.5", "--output", "sweep.csv",
        ],
    );
    assert_ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("duplicate"));
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "quantile,faithfulness_auc,complexity");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.5,"));
    assert!(lines[2].starts_with("0.9,"));
}

#[test]
fn external_model_runs_through_the_stub_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    gen_tiny(dir, "data.bin");
    let spec = format!("external:{} stub-endpoint --fixed 0.5,1.5", bin());
    assert_ok(&run(
        dir,
        &[
            "explain", "--data", "data.bin", "--model", &spec, "--output-dir", "maps",
            "--n-masks", "60", "--limit", "1", "--target", "0",
        ],
    ));
    // Fixed logits mean every mask scores the same, so the map is flat
    // up to accumulation rounding.
    let csv = std::fs::read_to_string(dir.join("maps/sample_00000.csv")).unwrap();
    let values: Vec<f64> = csv.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 33);
    assert!(values.iter().all(|&v| (v - values[0]).abs() < 1e-12), "{values:?}");
    assert!(values[0] > 0.0);
}
