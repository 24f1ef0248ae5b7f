//! Documents produced outside this crate: a decision tree exported from
//! scikit-learn together with that library's own predictions, and the JSON
//! a conformance harness reports back.

use std::path::PathBuf;

use tinyclf_core::eval::harness::{calibration_ratio, HarnessRun};
use tinyclf_core::ir::{to_json, validate};
use tinyclf_core::{evaluate, generate, load_csv, parse_model, EvalConfig, GenOptions, NumericMode, TreeStyle};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn iris_tree() -> tinyclf_core::ModelIR {
    parse_model(&std::fs::read_to_string(data("iris_tree.json")).unwrap()).unwrap()
}

#[test]
fn exported_tree_keeps_its_node_count() {
    let m = iris_tree();
    assert!(validate(&m).is_empty());
    let recorded: usize = m.metadata["node_count"].parse().unwrap();
    assert_eq!(m.stats().node_count, recorded);
    assert_eq!(m.class_labels, vec!["setosa", "versicolor", "virginica"]);
}

#[test]
fn exported_tree_reproduces_library_predictions() {
    let m = iris_tree();
    // The label column holds the exporting library's prediction, so
    // accuracy here is agreement with it.
    let ds = load_csv(data("iris_sklearn_predictions.csv"), "predicted".parse().unwrap(), true).unwrap();
    assert_eq!(ds.len(), 150);
    for style in [TreeStyle::Iterative, TreeStyle::IfElse] {
        for mode in [NumericMode::Flt, NumericMode::FXP32] {
            let r = evaluate(
                &m,
                &ds,
                &EvalConfig::new(mode).with_tree_style(style).with_repetitions(1),
            )
            .unwrap();
            assert_eq!(r.n_correct, 150, "{mode} {style}");
        }
    }
}

#[test]
fn round_trip_is_lossless() {
    let m = iris_tree();
    let again = parse_model(&to_json(&m)).unwrap();
    assert_eq!(again, m);
    assert_eq!(again.fingerprint(), m.fingerprint());
}

#[test]
fn harness_report_contract() {
    let m = iris_tree();
    let src = generate(&m, &GenOptions::new(NumericMode::FXP16).with_test_hook(true)).unwrap();
    let doc = format!(
        r#"{{"source_path": "iris.cpp", "vectors_path": "iris.csv",
            "predictions": [0, 1, 2], "raw_scores": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
            "sizes": {{"text": 512, "data": 0, "bss": 0, "rodata": {}}}}}"#,
        src.memory.flash_const_bytes
    );
    let run = HarnessRun::from_json(&doc).unwrap();
    assert_eq!(run.predictions, vec![0, 1, 2]);
    assert_eq!(calibration_ratio(&src.memory, &run.sizes), Some(1.0));

    let minimal =
        r#"{"source_path": "a", "vectors_path": "b", "predictions": [], "sizes": {"text": 1, "data": 2, "bss": 3}}"#;
    let run = HarnessRun::from_json(minimal).unwrap();
    assert_eq!((run.raw_scores, run.sizes.rodata), (None, None));
}
