use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::ir::{parse_model, Activation, LinearModel, Payload, ScoreRule};
use crate::synth;

fn opts(header: bool) -> CsvOptions {
    CsvOptions {
        label_column: LabelColumn::Last,
        header,
        class_labels: None,
    }
}

fn pendigits_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/pendigits.csv")
}

/// Always predicts the first class.
fn constant_tree(n_features: usize, classes: &[&str]) -> crate::ir::ModelIR {
    let labels: Vec<String> = classes.iter().map(|c| format!("{c:?}")).collect();
    parse_model(&format!(
        r#"{{"family": "tree", "n_features": {n_features}, "classes": [{}], "payload": {{"nodes": [{{"leaf": 0}}]}}}}"#,
        labels.join(", ")
    ))
    .unwrap()
}

fn linear_model(d: usize, classes: &[&str]) -> crate::ir::ModelIR {
    crate::ir::ModelIR {
        n_features: d,
        class_labels: classes.iter().map(|c| c.to_string()).collect(),
        metadata: BTreeMap::new(),
        payload: Payload::Linear(LinearModel {
            weights: (0..classes.len())
                .map(|k| (0..d).map(|j| if j == k { 1.0 } else { 0.1 }).collect())
                .collect(),
            bias: vec![0.0; classes.len()],
            score_rule: ScoreRule::ArgmaxLinear,
        }),
    }
}

#[test]
fn three_row_csv() {
    let ds = parse_csv("f0,f1,y\n1,2,a\n3,4,b\n5,6,a\n", "t", &opts(true)).unwrap();
    assert_eq!(ds.len(), 3);
    assert_eq!(ds.n_features(), 2);
    assert_eq!(ds.class_labels, vec!["a", "b"]);
    assert_eq!(ds.labels, vec![0, 1, 0]);
    assert_eq!(ds.features[2], vec![5.0, 6.0]);
}

#[test]
fn non_numeric_cell_is_located() {
    let err = parse_csv("f0,f1,y\n1,2,a\n3,x,b\n", "t", &opts(true)).unwrap_err();
    assert_eq!(
        err,
        EvalError::ParseError {
            row: 2,
            column: "f1".into(),
            value: "x".into()
        }
    );
    let err = parse_csv("1,2,a\n3,x,b\n", "t", &opts(false)).unwrap_err();
    assert_eq!(
        err,
        EvalError::ParseError {
            row: 2,
            column: "1".into(),
            value: "x".into()
        }
    );
}

#[test]
fn malformed_csv() {
    assert!(matches!(
        parse_csv("1,2,a\n3,b\n", "t", &opts(false)),
        Err(EvalError::RaggedRow {
            row: 2,
            expected: 3,
            found: 2
        })
    ));
    assert_eq!(parse_csv("f0,y\n", "t", &opts(true)), Err(EvalError::Empty));
    let named = CsvOptions {
        label_column: LabelColumn::Name("label".into()),
        header: true,
        class_labels: None,
    };
    assert!(matches!(
        parse_csv("f0,y\n1,a\n", "t", &named),
        Err(EvalError::MissingLabelColumn(_))
    ));
    let fixed = CsvOptions {
        class_labels: Some(vec!["a".into()]),
        ..opts(false)
    };
    assert!(matches!(
        parse_csv("1,a\n2,b\n", "t", &fixed),
        Err(EvalError::UnknownLabel { row: 2, .. })
    ));
}

#[test]
fn label_column_choices() {
    let first = CsvOptions {
        label_column: "0".parse().unwrap(),
        header: true,
        class_labels: None,
    };
    let ds = parse_csv("y,f0,f1\nq,1,2\n", "t", &first).unwrap();
    assert_eq!(ds.features, vec![vec![1.0, 2.0]]);
    let named = CsvOptions {
        label_column: "y".parse().unwrap(),
        header: true,
        class_labels: None,
    };
    assert_eq!(
        parse_csv("f0,y,f1\n1,q,2\n", "t", &named).unwrap().features,
        vec![vec![1.0, 2.0]]
    );
    assert_eq!("LAST".parse::<LabelColumn>().unwrap(), LabelColumn::Last);
}

#[test]
fn missing_file_is_io_error() {
    assert!(matches!(
        load_csv("/nonexistent/x.csv", LabelColumn::Last, true),
        Err(EvalError::Io { .. })
    ));
}

#[test]
fn pendigits_fixture() {
    let ds = load_csv(pendigits_path(), LabelColumn::Last, true).unwrap();
    assert_eq!(ds.len(), 10_992);
    assert_eq!(ds.n_features(), 16);
    assert_eq!(ds.class_labels.len(), 10);
    assert_eq!(ds.class_counts().iter().sum::<usize>(), 10_992);
    assert_eq!(ds.source_name, "pendigits.csv");
}

fn two_class(n_each: usize) -> Dataset {
    let mut text = String::new();
    for i in 0..n_each {
        text.push_str(&format!("{i},a\n{i}.5,b\n"));
    }
    parse_csv(&text, "t", &opts(false)).unwrap()
}

#[test]
fn stratified_split_sizes() {
    let ds = two_class(50);
    let (train, test) = holdout_split(&ds, 0.7, 1).unwrap();
    assert_eq!((train.len(), test.len()), (70, 30));
    assert_eq!(train.class_counts(), vec![35, 35]);
    assert_eq!(test.class_counts(), vec![15, 15]);
    let mut all: Vec<_> = train
        .features
        .iter()
        .chain(&test.features)
        .map(|r| r[0].to_bits())
        .collect();
    all.sort_unstable();
    all.dedup();
    assert_eq!(all.len(), 100);
    assert_eq!(test.source_name, "t#test");
}

#[test]
fn split_is_seeded() {
    let ds = two_class(40);
    assert_eq!(holdout_split(&ds, 0.7, 9).unwrap(), holdout_split(&ds, 0.7, 9).unwrap());
    assert_ne!(
        holdout_split(&ds, 0.7, 9).unwrap().1,
        holdout_split(&ds, 0.7, 10).unwrap().1
    );
}

#[test]
fn split_errors() {
    let ds = parse_csv("1,a\n2,a\n3,b\n", "t", &opts(false)).unwrap();
    assert_eq!(holdout_split(&ds, 0.7, 0), Err(EvalError::DegenerateClass("b".into())));
    let ds = two_class(5);
    for f in [0.0, 1.0, -0.5, f64::NAN] {
        assert!(matches!(holdout_split(&ds, f, 0), Err(EvalError::InvalidFraction(_))));
    }
    assert_eq!(holdout_split(&ds, 0.01, 0), Err(EvalError::EmptySplit("train")));
}

#[test]
fn constant_model_accuracy() {
    let ds = parse_csv("1,2,a\n3,4,a\n5,6,a\n", "t", &opts(false)).unwrap();
    let m = constant_tree(2, &["a", "b"]);
    for config in EvalConfig::matrix(Family::Tree) {
        let r = evaluate(&m, &ds, &config).unwrap();
        assert_eq!((r.accuracy, r.n_correct, r.n_total), (1.0, 3, 3));
    }
    let ds = parse_csv("1,2,b\n3,4,a\n", "t", &opts(false)).unwrap();
    assert_eq!(
        evaluate(&m, &ds, &EvalConfig::new(NumericMode::Flt)).unwrap().accuracy,
        0.5
    );
}

#[test]
fn classes_map_by_name() {
    let ds = parse_csv("1,2,b\n3,4,a\n", "t", &opts(false)).unwrap();
    assert_eq!(ds.class_labels, vec!["b", "a"]);
    let m = constant_tree(2, &["a", "b"]);
    let r = evaluate(&m, &ds, &EvalConfig::new(NumericMode::Flt)).unwrap();
    assert_eq!(r.n_correct, 1);
    assert!(evaluate(
        &constant_tree(1, &["a", "b", "c"]),
        &two_class(2),
        &EvalConfig::new(NumericMode::Flt)
    )
    .is_ok());
}

#[test]
fn float_mode_has_no_range_events() {
    let ds = load_csv(pendigits_path(), LabelColumn::Last, true).unwrap();
    let (_, test) = holdout_split(&ds, 0.7, 0).unwrap();
    let m = linear_model(16, &["0", "1", "2", "3", "4", "5", "6", "7", "8", "9"]);
    let r = evaluate(&m, &test, &EvalConfig::new(NumericMode::Flt).with_repetitions(1)).unwrap();
    assert_eq!((r.underflow_rate, r.overflow_rate), (0.0, 0.0));
    assert_eq!(r.counters, OpCounters::default());
    assert_eq!(r.memory.flash_const_bytes, (16 * 10 + 10) * 4);
    let r16 = evaluate(&m, &test, &EvalConfig::new(NumericMode::FXP16).with_repetitions(1)).unwrap();
    assert!(r16.counters.op_count > 0);
}

#[test]
fn evaluate_errors() {
    let ds = two_class(3);
    let m = constant_tree(2, &["a", "b"]);
    assert_eq!(
        evaluate(&m, &ds, &EvalConfig::new(NumericMode::Flt)).unwrap_err(),
        EvalError::DimensionMismatch { expected: 2, found: 1 }
    );
    let m = constant_tree(1, &["a", "b"]);
    assert_eq!(
        evaluate(&m, &ds, &EvalConfig::new(NumericMode::Flt).with_repetitions(0)),
        Err(EvalError::NoRepetitions)
    );
    let three = parse_csv("1,x\n2,y\n3,z\n", "t", &opts(false)).unwrap();
    assert!(matches!(
        evaluate(&m, &three, &EvalConfig::new(NumericMode::Flt)),
        Err(EvalError::ClassMismatch { .. })
    ));
}

#[test]
fn unsupported_emission_still_evaluates() {
    let m = synth::random_mlp(
        &mut ChaCha8Rng::seed_from_u64(1),
        &[1, 3, 2],
        Activation::Sigmoid,
        Activation::Identity,
    );
    let m = crate::ir::ModelIR {
        class_labels: vec!["a".into(), "b".into()],
        ..m
    };
    let r = evaluate(
        &m,
        &two_class(4),
        &EvalConfig::new(NumericMode::FXP8).with_repetitions(1),
    )
    .unwrap();
    assert_eq!(r.memory.elem_bytes, 1);
    assert_eq!(r.sigmoid, Some(SigmoidVariant::Exact));
}

fn reports() -> (EvalReport, EvalReport) {
    let ds = load_csv(pendigits_path(), LabelColumn::Last, true).unwrap();
    let (_, test) = holdout_split(&ds, 0.7, 0).unwrap();
    let m = linear_model(16, &["0", "1", "2", "3", "4", "5", "6", "7", "8", "9"]);
    let flt = evaluate(&m, &test, &EvalConfig::new(NumericMode::Flt).with_repetitions(1)).unwrap();
    let f16 = evaluate(&m, &test, &EvalConfig::new(NumericMode::FXP16).with_repetitions(1)).unwrap();
    (flt, f16)
}

#[test]
fn compare_identical_runs() {
    let (flt, _) = reports();
    let c = compare_reports(&flt, &flt, 0.01).unwrap();
    for row in &c.rows {
        assert_eq!(row.delta, 0.0, "{}", row.metric);
    }
    assert!(!c.regression);
    assert!(c.to_string().contains("accuracy"));
}

#[test]
fn fixed_16_linear_halves_flash() {
    let (flt, f16) = reports();
    let c = compare_reports(&flt, &f16, 0.01).unwrap();
    let flash = c.rows.iter().find(|r| r.metric == "flash_const_bytes").unwrap();
    assert_eq!(flash.ratio, Some(0.5));
}

#[test]
fn batch_has_one_row_per_run() {
    let ds = two_class(10);
    let m = constant_tree(1, &["a", "b"]);
    let runs: Vec<_> = EvalConfig::matrix(Family::Tree)
        .iter()
        .map(|c| evaluate(&m, &ds, &c.with_repetitions(1)).unwrap())
        .collect();
    assert_eq!(runs.len(), 6);
    let b = compare_batch(&runs[0], &runs, 0.0).unwrap();
    assert_eq!(b.rows.len(), runs.len());
    assert!(b.rows.iter().all(|r| r.accuracy_delta == 0.0 && !r.regression));
    assert_eq!(b.to_string().lines().count(), 2 + runs.len());
}

#[test]
fn mismatched_runs_are_refused() {
    let m = constant_tree(1, &["a", "b"]);
    let a = evaluate(&m, &two_class(3), &EvalConfig::new(NumericMode::Flt)).unwrap();
    let b = evaluate(&m, &two_class(4), &EvalConfig::new(NumericMode::Flt)).unwrap();
    assert!(matches!(
        compare_reports(&a, &b, 0.0),
        Err(EvalError::MismatchedRuns(_))
    ));
    let other = constant_tree(1, &["b", "a"]);
    let c = evaluate(&other, &two_class(3), &EvalConfig::new(NumericMode::Flt)).unwrap();
    assert!(matches!(
        compare_batch(&a, &[c], 0.0),
        Err(EvalError::MismatchedRuns(_))
    ));
}

#[test]
fn report_json_round_trip() {
    let m = constant_tree(1, &["a", "b"]);
    let r = evaluate(&m, &two_class(3), &EvalConfig::new(NumericMode::FXP32)).unwrap();
    let back: EvalReport = serde_json::from_str(&r.to_json_pretty()).unwrap();
    assert_eq!(back, r);
    assert!(r.to_string().contains("accuracy"));
    assert_eq!(r.tree_style, Some(TreeStyle::Iterative));
    assert_eq!(r.sigmoid, None);
}
