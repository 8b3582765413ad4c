mod common;

use std::path::Path;
use std::process::Command;

use plasticity_harness::domain::Regime;
use plasticity_harness::runner::{self, read_metrics_csv, run_experiment, ExperimentConfig, RunOptions};
use serde_json::{json, Value};

const ECHO: &str = env!("CARGO_BIN_EXE_plasticity-echo-plugin");
const CLI: &str = env!("CARGO_BIN_EXE_plasticity");

fn base_config(out: &Path) -> Value {
    json!({
        "name": "tiny",
        "dataset": { "synthetic": { "script": { "base": { "ar": [0.5] } }, "length": 400, "seed": 3 } },
        "partitions": 2,
        "context": 8,
        "horizon": 4,
        "models": [ { "id": "naive", "kind": "naive_seasonal" } ],
        "regimes": ["zero"],
        "train": { "epochs": 2, "batch_size": 16, "lr": 0.001 },
        "output": out,
    })
}

fn config(value: Value) -> ExperimentConfig {
    serde_json::from_value(value).unwrap()
}

fn run(value: Value) -> runner::RunResult {
    run_experiment(&config(value), Path::new("."), &RunOptions::default()).unwrap()
}

#[test]
fn zero_only_naive_gives_one_row_per_partition() {
    let dir = tempfile::tempdir().unwrap();
    let result = run(base_config(dir.path()));
    let table = read_metrics_csv(&result.dir.join("metrics.csv")).unwrap();
    assert_eq!(table.rows.len(), 2);
    assert!(table.rows.iter().all(|r| r.regime == Regime::Zero && r.model_id == "naive/s0"));
    assert!(!result.failed());
}

fn mlp_three_regimes(out: &Path) -> Value {
    let mut cfg = base_config(out);
    cfg["partitions"] = json!(10);
    cfg["dataset"]["synthetic"]["length"] = json!(1500);
    cfg["models"] = json!([{ "id": "mlp", "kind": "mlp", "hidden": [8] }]);
    cfg["regimes"] = json!(["zero", "incremental", "full"]);
    cfg["pretrain"] = json!({ "corpus": [ { "synthetic": { "script": { "base": { "ar": [0.5] } }, "length": 1500 } } ] });
    cfg
}

#[test]
fn three_regimes_fill_the_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let result = run(mlp_three_regimes(dir.path()));
    assert_eq!(result.table.rows.len(), 30);
    for regime in [Regime::Zero, Regime::Incremental, Regime::Full] {
        assert_eq!(result.table.rows.iter().filter(|r| r.regime == regime).count(), 10);
    }
    let ratios = &result.table.ratios;
    assert_eq!(ratios.len(), 10);
    assert!(ratios.iter().all(|r| r.r_zero.is_some() && r.r_full.is_some() && r.r_fz.is_some()));
    for r in ratios {
        let (z, f, fz) = (
            r.r_zero.unwrap().value().unwrap(),
            r.r_full.unwrap().value().unwrap(),
            r.r_fz.unwrap().value().unwrap(),
        );
        assert!((f - z / fz).abs() <= 1e-12 * f.abs());
    }

    let model = &result.summary.models[0];
    assert_eq!(model.lineage.len(), 10);
    let pretrain_sha = {
        let text = std::fs::read(result.dir.join("checkpoints/mlp-s0/pretrain.ckpt")).unwrap();
        use sha2::Digest;
        hex::encode(sha2::Sha256::digest(&text))
    };
    assert_eq!(model.lineage[0].input_sha256, pretrain_sha);
    for pair in model.lineage.windows(2) {
        assert_eq!(pair[1].input_sha256, pair[0].output_sha256);
    }
    for step in &model.lineage {
        let ckpt = plasticity_harness::models::load(result.dir.join(&step.checkpoint)).unwrap();
        assert_eq!(ckpt.provenance.partitions_seen, (0..=step.p).collect::<Vec<_>>());
    }
    let forgetting = model.forgetting.as_ref().unwrap();
    let inc: Vec<f64> = (0..10)
        .map(|p| result.table.mse("mlp/s0", Regime::Incremental, p).unwrap())
        .collect();
    assert_eq!(forgetting.diagonal(), inc);
    assert!(model.trends.contains_key("r_full"));
    assert_eq!(model.moments.len(), 30);

    let log = std::fs::read_to_string(result.dir.join("logs/train.jsonl")).unwrap();
    // pretrain + 10 incremental rounds + 10 full cells, 2 epochs each
    assert_eq!(log.lines().count(), 2 * 21);
}

#[test]
fn identical_runs_give_identical_metrics() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run(mlp_three_regimes(a.path()));
    let opts = RunOptions {
        output: Some(b.path().to_path_buf()),
        jobs: Some(1),
        ..RunOptions::default()
    };
    let second = run_experiment(&config(mlp_three_regimes(a.path())), Path::new("."), &opts).unwrap();
    assert_eq!(
        std::fs::read(first.dir.join("metrics.csv")).unwrap(),
        std::fs::read(second.dir.join("metrics.csv")).unwrap()
    );
}

#[test]
fn pristine_restart_starts_every_round_from_the_initial_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = mlp_three_regimes(dir.path());
    cfg["incremental_start"] = json!("pristine");
    cfg["regimes"] = json!(["incremental"]);
    cfg["partitions"] = json!(3);
    let result = run(cfg);
    let lineage = &result.summary.models[0].lineage;
    assert!(lineage.iter().all(|s| s.input_sha256 == lineage[0].input_sha256));
}

#[test]
fn seeds_multiply_lineages() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(dir.path());
    cfg["seeds"] = json!([1, 2, 3]);
    cfg["dataset"]["synthetic"].as_object_mut().unwrap().remove("seed");
    let result = run(cfg);
    assert_eq!(result.table.rows.len(), 6);
    let ids = result.table.model_ids();
    assert_eq!(ids, vec!["naive/s1", "naive/s2", "naive/s3"]);
    // each seed generated its own stream
    assert_ne!(result.table.rows[0].mse, result.table.rows[2].mse);
}

#[test]
fn failing_plugin_is_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(dir.path());
    cfg["models"] = json!([
        { "id": "naive", "kind": "naive_seasonal" },
        { "id": "broken", "kind": "plugin", "command": ECHO, "args": ["--misbehave", "die"] },
    ]);
    let result = run(cfg);
    assert!(result.failed());
    assert_eq!(result.summary.failures.len(), 1);
    assert_eq!(result.summary.failures[0].model_id, "broken/s0");
    assert!(result.table.rows.iter().all(|r| r.model_id == "naive/s0"));
    assert_eq!(result.table.rows.len(), 2);
    let failures: Value = serde_json::from_str(&std::fs::read_to_string(result.dir.join("failures.json")).unwrap()).unwrap();
    assert_eq!(failures.as_array().unwrap().len(), 1);
}

#[test]
fn plugin_and_native_naive_give_identical_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(dir.path());
    cfg["regimes"] = json!(["zero", "incremental", "full"]);
    cfg["models"] = json!([
        { "id": "naive", "kind": "naive_seasonal" },
        { "id": "remote", "kind": "plugin", "command": ECHO },
    ]);
    let result = run(cfg);
    assert!(!result.failed(), "{:?}", result.summary.failures);
    let csv = std::fs::read_to_string(result.dir.join("metrics.csv")).unwrap();
    let strip = |prefix: &str| -> Vec<String> {
        csv.lines()
            .filter_map(|l| l.strip_prefix(prefix).map(str::to_string))
            .collect()
    };
    let native = strip("naive/s0,");
    assert_eq!(native.len(), 6);
    assert_eq!(native, strip("remote/s0,"));
}

#[test]
fn trainable_plugin_runs_every_regime() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(dir.path());
    cfg["partitions"] = json!(4);
    cfg["dataset"]["synthetic"]["length"] = json!(800);
    cfg["regimes"] = json!(["zero", "incremental", "full"]);
    cfg["models"] = json!([{ "id": "bias", "kind": "plugin", "command": ECHO, "args": ["--kind", "bias"] }]);
    let result = run(cfg);
    assert!(!result.failed(), "{:?}", result.summary.failures);
    assert_eq!(result.table.rows.len(), 12);
    let f = result.summary.models[0].forgetting.as_ref().unwrap();
    let inc: Vec<f64> = (0..4)
        .map(|p| result.table.mse("bias/s0", Regime::Incremental, p).unwrap())
        .collect();
    assert_eq!(f.diagonal(), inc);
    // full at p=0 and incremental at p=0 see the same data from the same state
    assert_eq!(
        result.table.mse("bias/s0", Regime::Full, 0),
        result.table.mse("bias/s0", Regime::Incremental, 0)
    );
}

#[test]
fn report_lists_spikes_and_writes_series() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("model_id,regime,p,mse\n");
    for (model, spike) in [("a", true), ("b", false)] {
        for p in 0..6 {
            let inc = if spike && p == 4 { 5.0 } else { 1.0 };
            csv.push_str(&format!("{model},zero,{p},2\n{model},incremental,{p},{inc}\n{model},full,{p},1\n"));
        }
    }
    std::fs::write(dir.path().join("metrics.csv"), csv).unwrap();
    let report = runner::report(dir.path()).unwrap();
    assert!(report.text.lines().any(|l| l == "spike: r_full p=4 [a]"), "{}", report.text);
    assert!(!report.text.contains("[b]\n") || !report.text.contains("spike: r_full p=4 [b]"));
    for metric in ["r_zero", "r_full", "r_fz", "mse"] {
        let text = std::fs::read_to_string(dir.path().join(format!("plots/{metric}.csv"))).unwrap();
        let series: std::collections::BTreeSet<&str> =
            text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        let expected = if metric == "mse" { 6 } else { 2 };
        assert_eq!(series.len(), expected, "{metric}: {series:?}");
    }
    assert!(dir.path().join("summary.txt").exists());
}

#[test]
fn report_without_ratio_pairs_says_so() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("metrics.csv"), "model_id,regime,p,mse\nm,zero,0,1\nm,zero,1,2\n").unwrap();
    let report = runner::report(dir.path()).unwrap();
    assert!(report.text.contains("no ratios computable"));
}

#[test]
fn report_errors_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let err = runner::report(dir.path()).unwrap_err().to_string();
    assert!(err.contains("metrics.csv"), "{err}");
    std::fs::write(dir.path().join("metrics.csv"), "model_id,regime,p,mse\nm,zero,zero,1\n").unwrap();
    let err = runner::report(dir.path()).unwrap_err().to_string();
    assert!(err.contains("metrics.csv") && err.contains("line 2"), "{err}");
}

fn findings(value: Value) -> Vec<String> {
    config(value).findings(Path::new("."))
}

#[test]
fn validation_findings() {
    let dir = tempfile::tempdir().unwrap();
    assert!(findings(base_config(dir.path())).is_empty());

    let mut cfg = base_config(dir.path());
    cfg["context"] = json!(96);
    cfg["horizon"] = json!(96);
    cfg["dataset"]["synthetic"]["length"] = json!(5000);
    cfg["models"] = json!([{
        "id": "chronos-like", "kind": "plugin", "command": ECHO,
        "capabilities": { "trainable": false, "max_horizon": 64, "max_context": 512, "channels": "any" }
    }]);
    let f = findings(cfg);
    assert!(f.iter().any(|s| s.contains("horizon exceeds plugin limit")), "{f:?}");

    let mut cfg = base_config(dir.path());
    cfg["partitions"] = json!(500);
    let f = findings(cfg);
    assert!(f.iter().any(|s| s.contains("exceeds series length")), "{f:?}");

    let mut cfg = base_config(dir.path());
    cfg["models"] = json!([{ "id": "mlp", "kind": "mlp", "hidden": [4] }]);
    let f = findings(cfg);
    assert!(f.iter().any(|s| s.contains("regime zero") && s.contains("pretrain")), "{f:?}");

    let mut cfg = base_config(dir.path());
    cfg["dataset"] = json!({ "csv": { "path": "/does/not/exist.csv" } });
    let f = findings(cfg);
    assert!(f.iter().any(|s| s.contains("/does/not/exist.csv")), "{f:?}");

    let mut cfg = base_config(dir.path());
    cfg["models"] = json!([{ "id": "a", "kind": "naive_seasonal" }, { "id": "a", "kind": "naive_seasonal" }]);
    cfg["train"]["epochs"] = json!(0);
    let f = findings(cfg);
    assert_eq!(f.len(), 2, "{f:?}");
}

#[test]
fn validate_config_reports_unreadable_and_malformed_files() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(runner::validate_config(&dir.path().join("missing.json")).len(), 1);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(runner::validate_config(&bad).len(), 1);
}

#[test]
fn invalid_config_refuses_to_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(dir.path());
    cfg["partitions"] = json!(0);
    let err = run_experiment(&config(cfg), Path::new("."), &RunOptions::default()).unwrap_err();
    assert!(matches!(err, plasticity_harness::Error::Config(_)));
}

#[test]
fn cli_round_trip_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen.json");
    std::fs::write(
        &gen,
        json!({ "name": "demo", "script": { "events": [ { "at_partition": 1, "kind": "mean_shift", "magnitude": 3.0 } ] },
                "length": 400, "partitions": 2 })
        .to_string(),
    )
    .unwrap();
    let status = Command::new(CLI)
        .args(["generate", "--config"])
        .arg(&gen)
        .arg("--out")
        .arg(dir.path())
        .args(["--seed", "7"])
        .status()
        .unwrap();
    assert!(status.success());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("demo-s7.json")).unwrap()).unwrap();
    assert_eq!(doc["events"][0]["step"], 200);

    let mut cfg = base_config(Path::new("results"));
    cfg["dataset"] = json!({ "csv": { "path": "demo-s7.csv", "time_column": "step" } });
    let cfg_path = dir.path().join("exp.json");
    std::fs::write(&cfg_path, cfg.to_string()).unwrap();

    let out = Command::new(CLI).args(["validate", "--config"]).arg(&cfg_path).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));

    let out = Command::new(CLI)
        .args(["run", "--jobs", "2", "--seed", "0,1", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run_dir = String::from_utf8(out.stdout).unwrap().trim().to_string();
    assert!(run_dir.starts_with(dir.path().join("results").to_str().unwrap()));
    assert_eq!(read_metrics_csv(&Path::new(&run_dir).join("metrics.csv")).unwrap().rows.len(), 4);

    let out = Command::new(CLI).args(["report", "--out", &run_dir]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("no ratios computable"));

    let mut bad = cfg.clone();
    bad["partitions"] = json!(0);
    std::fs::write(&cfg_path, bad.to_string()).unwrap();
    let out = Command::new(CLI).args(["validate", "--config"]).arg(&cfg_path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(CLI).args(["run", "--config"]).arg(&cfg_path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let mut failing = cfg.clone();
    failing["models"] = json!([{ "id": "x", "kind": "plugin", "command": ECHO, "args": ["--misbehave", "die"] }]);
    std::fs::write(&cfg_path, failing.to_string()).unwrap();
    let out = Command::new(CLI).args(["run", "--config"]).arg(&cfg_path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
