use std::fmt;

use serde::{Deserialize, Serialize};

use super::{EvalError, EvalReport};

/// One metric of two runs side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    pub a: f64,
    pub b: f64,
    /// `b - a`.
    pub delta: f64,
    /// `b / a`; `None` when `a` is zero.
    pub ratio: Option<f64>,
}

impl MetricRow {
    fn new(metric: &str, a: f64, b: f64) -> Self {
        MetricRow {
            metric: metric.to_string(),
            a,
            b,
            delta: b - a,
            ratio: (a != 0.0).then(|| b / a),
        }
    }
}

/// Two runs of the same model on the same test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub label_a: String,
    pub label_b: String,
    pub rows: Vec<MetricRow>,
    /// Accuracy drop from `a` to `b` beyond which `regression` is set.
    pub threshold: f64,
    pub regression: bool,
}

fn check_comparable(a: &EvalReport, b: &EvalReport) -> Result<(), EvalError> {
    if a.model_fingerprint != b.model_fingerprint {
        return Err(EvalError::MismatchedRuns("different models".to_string()));
    }
    if a.dataset_fingerprint != b.dataset_fingerprint {
        return Err(EvalError::MismatchedRuns("different test sets".to_string()));
    }
    Ok(())
}

/// Per-metric deltas and ratios from `a` to `b`. `threshold` is an accuracy
/// fraction: a drop larger than it flags a regression.
pub fn compare_reports(a: &EvalReport, b: &EvalReport, threshold: f64) -> Result<Comparison, EvalError> {
    check_comparable(a, b)?;
    let rows = vec![
        MetricRow::new("accuracy", a.accuracy, b.accuracy),
        MetricRow::new("underflow_rate", a.underflow_rate, b.underflow_rate),
        MetricRow::new("overflow_rate", a.overflow_rate, b.overflow_rate),
        MetricRow::new("op_count", a.counters.op_count as f64, b.counters.op_count as f64),
        MetricRow::new("mean_host_time_us", a.mean_host_time_us, b.mean_host_time_us),
        MetricRow::new(
            "flash_const_bytes",
            a.memory.flash_const_bytes as f64,
            b.memory.flash_const_bytes as f64,
        ),
        MetricRow::new("sram_bytes", a.memory.sram_bytes as f64, b.memory.sram_bytes as f64),
    ];
    Ok(Comparison {
        label_a: a.label(),
        label_b: b.label(),
        rows,
        threshold,
        regression: a.accuracy - b.accuracy > threshold,
    })
}

fn ratio_text(r: Option<f64>) -> String {
    r.map_or_else(|| "-".to_string(), |r| format!("{r:.4}"))
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "a: {}", self.label_a)?;
        writeln!(f, "b: {}", self.label_b)?;
        writeln!(
            f,
            "{:<20} {:>14} {:>14} {:>14} {:>10}",
            "metric", "a", "b", "delta", "ratio"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<20} {:>14.6} {:>14.6} {:>14.6} {:>10}",
                r.metric,
                r.a,
                r.b,
                r.delta,
                ratio_text(r.ratio)
            )?;
        }
        if self.regression {
            write!(f, "REGRESSION: accuracy dropped by more than {}", self.threshold)
        } else {
            write!(f, "no accuracy regression beyond {}", self.threshold)
        }
    }
}

/// One configuration against the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub label: String,
    pub accuracy: f64,
    pub accuracy_delta: f64,
    pub underflow_rate: f64,
    pub overflow_rate: f64,
    pub flash_const_bytes: usize,
    pub flash_ratio: Option<f64>,
    pub sram_bytes: usize,
    pub regression: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchComparison {
    pub baseline: String,
    pub threshold: f64,
    pub rows: Vec<BatchRow>,
}

/// One row per report, each measured against `baseline`.
pub fn compare_batch(baseline: &EvalReport, runs: &[EvalReport], threshold: f64) -> Result<BatchComparison, EvalError> {
    let mut rows = Vec::with_capacity(runs.len());
    for r in runs {
        check_comparable(baseline, r)?;
        let base_flash = baseline.memory.flash_const_bytes;
        rows.push(BatchRow {
            label: r.label(),
            accuracy: r.accuracy,
            accuracy_delta: r.accuracy - baseline.accuracy,
            underflow_rate: r.underflow_rate,
            overflow_rate: r.overflow_rate,
            flash_const_bytes: r.memory.flash_const_bytes,
            flash_ratio: (base_flash != 0).then(|| r.memory.flash_const_bytes as f64 / base_flash as f64),
            sram_bytes: r.memory.sram_bytes,
            regression: baseline.accuracy - r.accuracy > threshold,
        });
    }
    Ok(BatchComparison {
        baseline: baseline.label(),
        threshold,
        rows,
    })
}

impl fmt::Display for BatchComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "baseline: {}", self.baseline)?;
        writeln!(
            f,
            "{:<28} {:>9} {:>9} {:>10} {:>10} {:>8} {:>7} {:>6}",
            "run", "accuracy", "delta", "underflow", "overflow", "flash", "ratio", "sram"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<28} {:>9.4} {:>+9.4} {:>10.6} {:>10.6} {:>8} {:>7} {:>6}{}",
                r.label,
                r.accuracy,
                r.accuracy_delta,
                r.underflow_rate,
                r.overflow_rate,
                r.flash_const_bytes,
                ratio_text(r.flash_ratio),
                r.sram_bytes,
                if r.regression { "  REGRESSION" } else { "" }
            )?;
        }
        Ok(())
    }
}
