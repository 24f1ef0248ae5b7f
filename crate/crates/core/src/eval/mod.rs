//! Datasets, holdout splits and accuracy/overflow/memory reports.

mod compare;
pub mod harness;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codegen::{self, CodegenError, GenOptions, MemoryEstimate};
use crate::fixedpoint::OpCounters;
use crate::inference::{Engine, EngineConfig, InferenceError, NumericMode, SigmoidVariant, TreeStyle};
use crate::ir::{Family, ModelIR};

pub use compare::{compare_batch, compare_reports, BatchComparison, BatchRow, Comparison, MetricRow};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("row {row}, column {column:?}: cannot parse {value:?} as a number")]
    ParseError { row: usize, column: String, value: String },
    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("label column {0} not found")]
    MissingLabelColumn(String),
    #[error("row {row}: label {label:?} is not one of the declared classes")]
    UnknownLabel { row: usize, label: String },
    #[error("dataset has no rows")]
    Empty,
    #[error("class {0:?} has a single instance and cannot be split")]
    DegenerateClass(String),
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("split leaves the {0} set empty")]
    EmptySplit(&'static str),
    #[error("dataset has {found} features, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dataset classes {dataset:?} do not fit the model's {model} classes")]
    ClassMismatch { dataset: Vec<String>, model: usize },
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error(transparent)]
    Codegen(#[from] CodegenError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error("reports are not comparable: {0}")]
    MismatchedRuns(String),
}

/// Labelled feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_labels: Vec<String>,
    pub source_name: String,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Instances per class, indexed like `class_labels`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_labels.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Hex SHA-256 over labels, class names and the exact feature bits.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for name in &self.class_labels {
            h.update((name.len() as u64).to_le_bytes());
            h.update(name.as_bytes());
        }
        for (row, &label) in self.features.iter().zip(&self.labels) {
            h.update((label as u64).to_le_bytes());
            for v in row {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    fn subset(&self, rows: &[usize], suffix: &str) -> Dataset {
        Dataset {
            features: rows.iter().map(|&i| self.features[i].clone()).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            class_labels: self.class_labels.clone(),
            source_name: format!("{}#{suffix}", self.source_name),
        }
    }
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    Index(usize),
    Name(String),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// `last`, a zero-based index, or a header name.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(if s.eq_ignore_ascii_case("last") {
            LabelColumn::Last
        } else if let Ok(i) = s.parse() {
            LabelColumn::Index(i)
        } else {
            LabelColumn::Name(s.to_string())
        })
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Last => f.write_str("last"),
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Name(n) => write!(f, "{n:?}"),
        }
    }
}

/// CSV reading options.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CsvOptions {
    pub label_column: LabelColumn,
    pub header: bool,
    /// Fixed class order; labels outside it are rejected. Without it classes
    /// are numbered by first appearance.
    pub class_labels: Option<Vec<String>>,
}

/// Reads a comma-separated file of numeric features and one label column.
pub fn load_csv(path: impl AsRef<Path>, label_column: LabelColumn, header: bool) -> Result<Dataset, EvalError> {
    load_csv_with(
        path,
        &CsvOptions {
            label_column,
            header,
            class_labels: None,
        },
    )
}

pub fn load_csv_with(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset, EvalError> {
    let path = path.as_ref();
    let io = |e: &dyn fmt::Display| EvalError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let text = std::fs::read_to_string(path).map_err(|e| io(&e))?;
    let name = path
        .file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
    parse_csv(&text, &name, opts)
}

/// [`load_csv_with`] on in-memory text.
pub fn parse_csv(text: &str, source_name: &str, opts: &CsvOptions) -> Result<Dataset, EvalError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(opts.header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let csv_err = |e: csv::Error| EvalError::Io {
        path: source_name.to_string(),
        message: e.to_string(),
    };
    let names: Option<Vec<String>> = if opts.header {
        Some(reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect())
    } else {
        None
    };

    let mut records = Vec::new();
    for r in reader.records() {
        let r = r.map_err(csv_err)?;
        if r.iter().all(str::is_empty) {
            continue;
        }
        records.push(r);
    }
    let width = names
        .as_ref()
        .map(Vec::len)
        .or_else(|| records.first().map(|r| r.len()))
        .ok_or(EvalError::Empty)?;
    let label_idx = match &opts.label_column {
        LabelColumn::Last => width.checked_sub(1),
        LabelColumn::Index(i) => Some(*i).filter(|&i| i < width),
        LabelColumn::Name(n) => names.as_ref().and_then(|h| h.iter().position(|c| c == n)),
    }
    .ok_or_else(|| EvalError::MissingLabelColumn(opts.label_column.to_string()))?;
    let column_name = |c: usize| names.as_ref().map_or_else(|| c.to_string(), |h| h[c].clone());

    let mut class_labels = opts.class_labels.clone().unwrap_or_default();
    let mut ds = Dataset {
        features: Vec::with_capacity(records.len()),
        labels: Vec::with_capacity(records.len()),
        class_labels: Vec::new(),
        source_name: source_name.to_string(),
    };
    for (i, r) in records.iter().enumerate() {
        let row = i + 1;
        if r.len() != width {
            return Err(EvalError::RaggedRow {
                row,
                expected: width,
                found: r.len(),
            });
        }
        let mut features = Vec::with_capacity(width - 1);
        for (c, cell) in r.iter().enumerate() {
            if c == label_idx {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| EvalError::ParseError {
                row,
                column: column_name(c),
                value: cell.to_string(),
            })?;
            features.push(v);
        }
        let label = &r[label_idx];
        let class = match class_labels.iter().position(|l| l == label) {
            Some(k) => k,
            None if opts.class_labels.is_some() => {
                return Err(EvalError::UnknownLabel {
                    row,
                    label: label.to_string(),
                });
            }
            None => {
                class_labels.push(label.to_string());
                class_labels.len() - 1
            }
        };
        ds.features.push(features);
        ds.labels.push(class);
    }
    if ds.is_empty() {
        return Err(EvalError::Empty);
    }
    ds.class_labels = class_labels;
    Ok(ds)
}

/// Stratified holdout: each class contributes `round(train_fraction × size)`
/// instances to the training set, chosen by a seeded shuffle. Both subsets
/// keep the original row order.
pub fn holdout_split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), EvalError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(EvalError::InvalidFraction(train_fraction));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.class_labels.len()];
    for (i, &l) in ds.labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, mut rows) in by_class.into_iter().enumerate() {
        match rows.len() {
            0 => continue,
            1 => return Err(EvalError::DegenerateClass(ds.class_labels[class].clone())),
            n => {
                rows.shuffle(&mut rng);
                let n_train = (train_fraction * n as f64).round() as usize;
                train.extend_from_slice(&rows[..n_train]);
                test.extend_from_slice(&rows[n_train..]);
            }
        }
    }
    if train.is_empty() {
        return Err(EvalError::EmptySplit("train"));
    }
    if test.is_empty() {
        return Err(EvalError::EmptySplit("test"));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.subset(&train, "train"), ds.subset(&test, "test")))
}

/// How [`evaluate`] runs a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub mode: NumericMode,
    /// MLP only.
    pub sigmoid: Option<SigmoidVariant>,
    /// Trees only.
    pub tree_style: Option<TreeStyle>,
    /// Timed passes over the test set; predictions come from the first.
    pub repetitions: usize,
}

pub const DEFAULT_REPETITIONS: usize = 10;

impl EvalConfig {
    pub fn new(mode: NumericMode) -> Self {
        EvalConfig {
            mode,
            sigmoid: None,
            tree_style: None,
            repetitions: DEFAULT_REPETITIONS,
        }
    }

    pub fn with_sigmoid(mut self, v: SigmoidVariant) -> Self {
        self.sigmoid = Some(v);
        self
    }

    pub fn with_tree_style(mut self, s: TreeStyle) -> Self {
        self.tree_style = Some(s);
        self
    }

    pub fn with_repetitions(mut self, n: usize) -> Self {
        self.repetitions = n;
        self
    }

    /// Code-generation options describing the same execution.
    pub fn gen_options(&self) -> GenOptions {
        GenOptions {
            mode: self.mode,
            sigmoid: self.sigmoid,
            tree_style: self.tree_style,
            ..GenOptions::new(self.mode)
        }
    }

    /// FLT, FXP32 and FXP16 crossed with every sigmoid variant (MLPs) or
    /// tree style (trees).
    pub fn matrix(family: Family) -> Vec<EvalConfig> {
        let modes = [NumericMode::Flt, NumericMode::FXP32, NumericMode::FXP16];
        let mut out = Vec::new();
        for mode in modes {
            let base = EvalConfig::new(mode);
            match family {
                Family::Mlp => out.extend(SigmoidVariant::ALL.iter().map(|&v| base.with_sigmoid(v))),
                Family::Tree => out.extend(
                    [TreeStyle::Iterative, TreeStyle::IfElse]
                        .iter()
                        .map(|&s| base.with_tree_style(s)),
                ),
                _ => out.push(base),
            }
        }
        out
    }
}

/// Outcome of evaluating one model on one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub n_correct: usize,
    pub n_total: usize,
    pub mode: NumericMode,
    pub sigmoid: Option<SigmoidVariant>,
    pub tree_style: Option<TreeStyle>,
    /// Arithmetic events summed over every prediction.
    pub counters: OpCounters,
    /// Events from converting the parameters once, not part of the rates.
    pub param_counters: OpCounters,
    pub underflow_rate: f64,
    pub overflow_rate: f64,
    /// Host wall time per instance; only meaningful relative to other runs
    /// on the same machine.
    pub mean_host_time_us: f64,
    pub memory: MemoryEstimate,
    pub model_fingerprint: String,
    pub dataset_fingerprint: String,
    pub dataset_name: String,
}

impl EvalReport {
    /// Short description of the run configuration, e.g. `FXP16(Q12.4) pwl2`.
    pub fn label(&self) -> String {
        let mut s = self.mode.to_string();
        if let Some(v) = self.sigmoid {
            s.push_str(&format!(" {v}"));
        }
        if let Some(t) = self.tree_style {
            s.push_str(&format!(" {t}"));
        }
        s
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "run             {}", self.label())?;
        writeln!(f, "dataset         {} ({} instances)", self.dataset_name, self.n_total)?;
        writeln!(
            f,
            "accuracy        {:.4} ({}/{})",
            self.accuracy, self.n_correct, self.n_total
        )?;
        writeln!(f, "underflow rate  {:.6}", self.underflow_rate)?;
        writeln!(f, "overflow rate   {:.6}", self.overflow_rate)?;
        writeln!(f, "operations      {}", self.counters.op_count)?;
        writeln!(f, "host time       {:.3} us/instance", self.mean_host_time_us)?;
        writeln!(f, "flash (const)   {} bytes", self.memory.flash_const_bytes)?;
        write!(f, "sram            {} bytes", self.memory.sram_bytes)
    }
}

/// Maps dataset class indices to model class indices: by name when every
/// dataset label names a model class, otherwise by position.
fn class_map(model: &ModelIR, test: &Dataset) -> Result<Vec<usize>, EvalError> {
    let by_name: Option<Vec<usize>> = test
        .class_labels
        .iter()
        .map(|l| model.class_labels.iter().position(|m| m == l))
        .collect();
    match by_name {
        Some(map) => Ok(map),
        None if test.class_labels.len() <= model.n_classes() => Ok((0..test.class_labels.len()).collect()),
        None => Err(EvalError::ClassMismatch {
            dataset: test.class_labels.clone(),
            model: model.n_classes(),
        }),
    }
}

/// Runs `model` over every row of `test`.
pub fn evaluate(model: &ModelIR, test: &Dataset, config: &EvalConfig) -> Result<EvalReport, EvalError> {
    if config.repetitions == 0 {
        return Err(EvalError::NoRepetitions);
    }
    if test.n_features() != model.n_features {
        return Err(EvalError::DimensionMismatch {
            expected: model.n_features,
            found: test.n_features(),
        });
    }
    let opts = config.gen_options();
    let memory = codegen::memory_estimate(model, &opts).or_else(|e| match e {
        CodegenError::Unsupported(_) => Ok(codegen::estimate_unchecked(model, &opts)),
        e => Err(e),
    })?;
    let map = class_map(model, test)?;
    let engine = Engine::new(
        model,
        EngineConfig::new(config.mode)
            .with_sigmoid(opts.sigmoid_or_default())
            .with_tree_style(opts.tree_style_or_default()),
    );

    let mut counters = OpCounters::default();
    let mut n_correct = 0;
    let start = Instant::now();
    for (x, &label) in test.features.iter().zip(&test.labels) {
        let p = engine.predict(x)?;
        counters.merge(&p.counters);
        if p.class_index == map[label] {
            n_correct += 1;
        }
    }
    for _ in 1..config.repetitions {
        for x in &test.features {
            std::hint::black_box(engine.predict(std::hint::black_box(x))?);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let n_total = test.len();
    let family = model.family();
    Ok(EvalReport {
        accuracy: n_correct as f64 / n_total as f64,
        n_correct,
        n_total,
        mode: config.mode,
        sigmoid: (family == Family::Mlp).then(|| opts.sigmoid_or_default()),
        tree_style: (family == Family::Tree).then(|| opts.tree_style_or_default()),
        counters,
        param_counters: engine.param_counters(),
        underflow_rate: counters.underflow_rate(),
        overflow_rate: counters.overflow_rate(),
        mean_host_time_us: elapsed * 1e6 / (config.repetitions * n_total) as f64,
        memory,
        model_fingerprint: model.fingerprint(),
        dataset_fingerprint: test.fingerprint(),
        dataset_name: test.source_name.clone(),
    })
}

pub use codegen::memory_estimate;

#[cfg(test)]
mod tests;
