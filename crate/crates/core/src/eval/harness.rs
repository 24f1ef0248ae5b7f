//! Exchange formats shared with the host conformance harness: the input
//! vectors it executes and the JSON it reports back.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::codegen::MemoryEstimate;

/// Section sizes of a compiled classifier object, in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SectionSizes {
    pub text: u64,
    pub data: u64,
    pub bss: u64,
    /// Read-only data holding the parameter arrays, when measured separately.
    #[serde(default)]
    pub rodata: Option<u64>,
}

/// Result of compiling and executing one emitted source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessRun {
    pub source_path: String,
    pub vectors_path: String,
    pub predictions: Vec<i64>,
    /// Output of `<prefix>_scores` per vector: raw integers in fixed point,
    /// single-precision values in FLT.
    #[serde(default)]
    pub raw_scores: Option<Vec<Vec<f64>>>,
    pub sizes: SectionSizes,
}

impl HarnessRun {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("harness runs always serialize")
    }
}

/// Writes one CSV row per input vector. Values are narrowed to single
/// precision first and printed so that `strtof` reads back the same float
/// the reference engine uses.
pub fn write_vectors_csv<W: Write>(mut out: W, rows: &[Vec<f64>]) -> std::io::Result<()> {
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| format!("{:?}", v as f32)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Measured constant data over estimated constant data.
pub fn calibration_ratio(estimate: &MemoryEstimate, sizes: &SectionSizes) -> Option<f64> {
    let measured = sizes.rodata?;
    (estimate.flash_const_bytes > 0).then(|| measured as f64 / estimate.flash_const_bytes as f64)
}
