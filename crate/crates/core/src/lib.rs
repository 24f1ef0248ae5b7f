//! Host-side toolkit for turning trained classifiers into self-contained C++
//! sources for microcontrollers.
//!
//! The crate is organised around a neutral model IR ([`ir`]) that every other
//! stage consumes:
//!
//! * [`fixedpoint`] emulates the Qn.m arithmetic embedded in generated code,
//!   with saturation and underflow/overflow counters.
//! * [`inference`] is the reference engine: it executes a model in 32-bit
//!   float or fixed point exactly as the emitted code does.
//! * [`codegen`] emits the C++ source and its memory estimate.
//! * [`eval`] loads datasets, splits them and produces accuracy/overflow/memory
//!   reports.
//! * [`synth`] draws random models for tests, fuzzing and benchmarks.

pub mod codegen;
pub mod eval;
pub mod fixedpoint;
pub mod inference;
pub mod ir;
pub mod synth;

pub use codegen::{generate, GenOptions, GeneratedSource, MemoryEstimate, TreeStyle};
pub use eval::{evaluate, holdout_split, load_csv, Dataset, EvalConfig, EvalReport};
pub use fixedpoint::{EvalContext, FixedValue, OpCounters, QFormat};
pub use inference::{NumericMode, Prediction, SigmoidVariant};
pub use ir::{parse_model, validate, Family, ModelIR, ModelStats};
