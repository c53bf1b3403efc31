//! Contract tests for the `ekgd` binary and the manifest runners: exit
//! codes, error JSON, artifact shapes, and the scoring path for explicit
//! models.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{tab1_csv, tab1_table};
use ekgd_core::event_model::Observation;
use ekgd_core::extcount::log2_biguint;
use ekgd_core::poset::{build_poset, count_extensions_exact};
use ekgd_core::relations::{Model, RelationCache};

fn ekgd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ekgd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_tab1(dir: &Path) -> std::path::PathBuf {
    let input = dir.join("tab1.csv");
    std::fs::write(&input, tab1_csv()).unwrap();
    input
}

#[test]
fn discover_writes_artifacts_and_nondecreasing_trace() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_tab1(dir.path());
    let out = dir.path().join("run");
    let output = ekgd(&[
        "discover",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--features",
        "Order,Invoice,Payment,SupplierOrder,Actor",
        "--budget-ms",
        "10",
    ]);
    assert!(output.status.success(), "{output:?}");

    let result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert!(result["best_model"].is_array());
    assert_eq!(result["score"]["exact"], serde_json::Value::Bool(true));
    assert!(result["counters"]["visited"].as_u64().unwrap() > 0);

    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    let scores: Vec<f64> = trace
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(scores.windows(2).all(|w| w[0] <= w[1]));
    let final_score = result["score"]["score_lo"].as_f64().unwrap();
    assert!((scores.last().unwrap() - final_score).abs() < 1e-9);

    assert!(out.join("ekg_0.dot").exists());
}

#[test]
fn missing_input_yields_error_json_and_exit_2() {
    let output = ekgd(&[
        "discover",
        "--input",
        "/nope/missing.csv",
        "--out",
        "/tmp/x",
    ]);
    assert_eq!(output.status.code(), Some(2));
    let value: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(value["error"]["code"], "INPUT_NOT_FOUND");
}

#[test]
fn score_order_invoice_sandwiches_the_exact_count() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_tab1(dir.path());
    let output = ekgd(&[
        "score",
        "--input",
        input.to_str().unwrap(),
        "--model",
        r#"[["Order"],["Invoice"]]"#,
        "--budget-ms",
        "1",
    ]);
    assert!(output.status.success(), "{output:?}");
    let value: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();

    // Independent exact count of the induced 14-element poset.
    let table = tab1_table();
    let cache = RelationCache::new(&table);
    let obs = Observation::new(&table, (0..14).collect()).unwrap();
    let poset = build_poset(&cache, &obs, &Model::atomic(["Order", "Invoice"])).unwrap();
    let exact = log2_biguint(&count_extensions_exact(&poset).unwrap());

    let sample = &value["per_sample"][0];
    let lo = sample["log2_lower"].as_f64().unwrap();
    let hi = sample["log2_upper"].as_f64().unwrap();
    assert!(
        lo - 1e-6 <= exact && exact <= hi + 1e-6,
        "[{lo},{hi}] vs {exact}"
    );
}

#[test]
fn score_empty_model_is_exact_factorial() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_tab1(dir.path());
    let output = ekgd(&["score", "--input", input.to_str().unwrap(), "--model", "[]"]);
    assert!(output.status.success(), "{output:?}");
    let value: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let expected = -ekgd_core::extcount::log2_factorial(14);
    assert_eq!(value["score"]["exact"], serde_json::Value::Bool(true));
    let lo = value["score"]["score_lo"].as_f64().unwrap();
    assert!((lo - expected).abs() < 1e-9);
}

#[test]
fn score_derived_model_works() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_tab1(dir.path());
    let output = ekgd(&[
        "score",
        "--input",
        input.to_str().unwrap(),
        "--model",
        r#"[["Order","Payment"]]"#,
    ]);
    assert!(output.status.success(), "{output:?}");
    let value: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(value["model"][0][0], "Order");
    assert_eq!(value["model"][0][1], "Payment");
    assert!(value["score"]["score_lo"].as_f64().is_some());
}

#[test]
fn score_unknown_feature_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_tab1(dir.path());
    let output = ekgd(&[
        "score",
        "--input",
        input.to_str().unwrap(),
        "--model",
        r#"[["Nonexistent"]]"#,
    ]);
    assert_eq!(output.status.code(), Some(2));
    let value: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(value["error"]["code"], "UNKNOWN_FEATURE");
}

#[test]
fn sample_partition_emits_disjoint_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_tab1(dir.path());
    let output = ekgd(&[
        "sample",
        "--input",
        input.to_str().unwrap(),
        "--samples",
        "2",
        "--sample-size",
        "7",
        "--scheme",
        "partition",
    ]);
    assert!(output.status.success(), "{output:?}");
    let value: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let samples = value["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 2);
    assert_eq!(samples[0][0], 0);
    assert_eq!(samples[1][0], 7);
    assert_eq!(value["event_ids"][0][0], "e_1");
}

#[test]
fn export_fig2_has_eight_reduced_edges() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_tab1(dir.path());
    let out = dir.path().join("dots");
    let output = ekgd(&[
        "export",
        "--input",
        input.to_str().unwrap(),
        "--model",
        r#"[["Order"],["Invoice"]]"#,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let dot = std::fs::read_to_string(out.join("ekg_0.dot")).unwrap();
    assert_eq!(dot.matches("->").count(), 8, "{dot}");
    for edge in [
        ("e_2", "e_5"),
        ("e_5", "e_7"),
        ("e_7", "e_34"),
        ("e_1", "e_18"),
        ("e_18", "e_28"),
        ("e_5", "e_9"),
        ("e_9", "e_30"),
        ("e_18", "e_30"),
    ] {
        let line = format!("\"{}\" -> \"{}\"", edge.0, edge.1);
        assert!(dot.contains(&line), "missing {line} in {dot}");
    }
    // Structural DOT sanity: balanced block, each edge labeled.
    assert!(dot.starts_with("digraph"));
    assert!(dot.trim_end().ends_with('}'));
    assert_eq!(dot.matches("[label=").count(), 8);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_tab1(dir.path());
    let config_path = dir.path().join("run.json");
    std::fs::write(
        &config_path,
        serde_json::json!({
            "input": input.to_str().unwrap(),
            "samples": 2,
            "sample_size": 7,
            "scheme": "partition",
        })
        .to_string(),
    )
    .unwrap();
    // The flag overrides the file's sample count.
    let output = ekgd(&[
        "sample",
        "--config",
        config_path.to_str().unwrap(),
        "--samples",
        "1",
    ]);
    assert!(output.status.success(), "{output:?}");
    let value: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(value["samples"].as_array().unwrap().len(), 1);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.json");
    std::fs::write(&config_path, r#"{"inputt": "x.csv"}"#).unwrap();
    let output = ekgd(&["sample", "--config", config_path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let value: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(value["error"]["code"], "CONFIG_INVALID");
}

#[test]
fn verify_subcommand_agrees_and_exits_zero() {
    let output = ekgd(&["verify", "--trials", "10"]);
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("0 failures"), "{stdout}");
}
