//! C++ source emission.
//!
//! [`generate`] turns a validated model into one self-contained file whose
//! only include is `<stdint.h>`. The file exposes
//!
//! * `int32_t <p>_classify(const T* x)`: class index for an `n_features`-long
//!   input, where `T` is `float` (FLT) or `<p>_fxp_t` (fixed point);
//! * `<p>_fxp_t <p>_to_fixed(float x)` in fixed-point modes, the entry
//!   conversion callers apply to every feature;
//! * `void <p>_scores(const T* x, T* out)` when the test hook is enabled,
//!   writing the same K scores the reference engine reports.
//!
//! Parameters live in `static const` arrays; the only mutable storage is on
//! the stack. FLT sources must be compiled without floating-point
//! contraction (`-ffp-contract=off`) to stay bit-identical with the host.

mod emit;
pub mod layout;
mod linear;
mod mlp;
mod runtime;
mod svm;
mod tree;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::inference::{NumericMode, SigmoidVariant, IF_ELSE_MAX_DEPTH};
use crate::ir::{validate, Activation, Family, Kernel, ModelIR, Payload, Violation};

pub use crate::inference::TreeStyle;
pub use layout::{measure_const_bytes, parameters};
pub use runtime::gen_fixedpoint_runtime;

use emit::Ops;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CodegenError {
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("model does not validate ({} violations)", .0.len())]
    InvalidModel(Vec<Violation>),
}

/// Code emission choices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GenOptions {
    pub mode: NumericMode,
    /// MLP only; `None` means exact.
    #[serde(default)]
    pub sigmoid: Option<SigmoidVariant>,
    /// Trees only; `None` means iterative.
    #[serde(default)]
    pub tree_style: Option<TreeStyle>,
    pub symbol_prefix: String,
    #[serde(default)]
    pub emit_test_hook: bool,
}

pub const DEFAULT_PREFIX: &str = "clf";

impl GenOptions {
    pub fn new(mode: NumericMode) -> Self {
        GenOptions {
            mode,
            sigmoid: None,
            tree_style: None,
            symbol_prefix: DEFAULT_PREFIX.to_string(),
            emit_test_hook: false,
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

    pub fn with_prefix(mut self, prefix: impl Into<String>) -> Self {
        self.symbol_prefix = prefix.into();
        self
    }

    pub fn with_test_hook(mut self, on: bool) -> Self {
        self.emit_test_hook = on;
        self
    }

    pub fn sigmoid_or_default(&self) -> SigmoidVariant {
        self.sigmoid.unwrap_or_default()
    }

    pub fn tree_style_or_default(&self) -> TreeStyle {
        self.tree_style.unwrap_or_default()
    }

    /// Checks the option invariants against a model family.
    pub fn check(&self, family: Family) -> Result<(), CodegenError> {
        if self.tree_style.is_some() && family != Family::Tree {
            return Err(CodegenError::InvalidOptions(format!(
                "tree style applies to tree models, not {family}"
            )));
        }
        if self.sigmoid.is_some() && family != Family::Mlp {
            return Err(CodegenError::InvalidOptions(format!(
                "sigmoid variant applies to MLP models, not {family}"
            )));
        }
        check_prefix(&self.symbol_prefix)
    }
}

const RESERVED: &[&str] = &[
    "alignas",
    "alignof",
    "and",
    "asm",
    "auto",
    "bool",
    "break",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "constexpr",
    "continue",
    "default",
    "delete",
    "do",
    "double",
    "else",
    "enum",
    "explicit",
    "export",
    "extern",
    "false",
    "float",
    "for",
    "friend",
    "goto",
    "if",
    "inline",
    "int",
    "long",
    "mutable",
    "namespace",
    "new",
    "noexcept",
    "not",
    "nullptr",
    "operator",
    "or",
    "private",
    "protected",
    "public",
    "register",
    "return",
    "short",
    "signed",
    "sizeof",
    "static",
    "struct",
    "switch",
    "template",
    "this",
    "throw",
    "true",
    "try",
    "typedef",
    "typename",
    "union",
    "unsigned",
    "using",
    "virtual",
    "void",
    "volatile",
    "while",
    "xor",
];

fn check_prefix(p: &str) -> Result<(), CodegenError> {
    let mut chars = p.chars();
    let valid_start = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
    let valid_rest = chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !valid_start || !valid_rest {
        return Err(CodegenError::InvalidOptions(format!(
            "symbol prefix {p:?} is not a C identifier"
        )));
    }
    if p.starts_with("__") || (p.starts_with('_') && p.chars().nth(1).is_some_and(|c| c.is_ascii_uppercase())) {
        return Err(CodegenError::InvalidOptions(format!(
            "symbol prefix {p:?} is reserved for the implementation"
        )));
    }
    if RESERVED.contains(&p) {
        return Err(CodegenError::InvalidOptions(format!(
            "symbol prefix {p:?} is a keyword"
        )));
    }
    Ok(())
}

/// Static storage the generated classifier needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MemoryEstimate {
    /// Bytes of `static const` data: parameters plus structural tables.
    pub flash_const_bytes: usize,
    /// Bytes of stack work buffers used by one classification.
    pub sram_bytes: usize,
    pub elem_bytes: usize,
}

/// Emitted source with its metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSource {
    pub text: String,
    pub memory: MemoryEstimate,
    pub options_echo: GenOptions,
    pub model_fingerprint: String,
    /// Non-fatal adjustments, such as an if/else tree emitted iteratively.
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl GeneratedSource {
    /// SHA-256 of the source text, hex encoded.
    pub fn text_hash(&self) -> String {
        hex::encode(Sha256::digest(self.text.as_bytes()))
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Shape {
    pub n_features: usize,
    pub n_classes: usize,
}

/// Tree style actually used: if/else falls back to iterative beyond
/// [`IF_ELSE_MAX_DEPTH`].
pub fn effective_tree_style(model: &ModelIR, opts: &GenOptions) -> Option<TreeStyle> {
    let Payload::Tree(t) = &model.payload else {
        return None;
    };
    match opts.tree_style_or_default() {
        TreeStyle::IfElse if t.depth() > IF_ELSE_MAX_DEPTH => Some(TreeStyle::Iterative),
        s => Some(s),
    }
}

fn check_supported(model: &ModelIR, opts: &GenOptions) -> Result<(), CodegenError> {
    if let NumericMode::Fxp(q) = opts.mode {
        if q.total_bits() == 8 {
            if let Payload::Mlp(m) = &model.payload {
                let variant = opts.sigmoid_or_default();
                let uses_sigmoid = m.layers.iter().any(|l| l.activation == Activation::Sigmoid);
                if uses_sigmoid && matches!(variant, SigmoidVariant::Exact | SigmoidVariant::Rational) {
                    return Err(CodegenError::Unsupported(format!(
                        "{variant} sigmoid in 8-bit fixed point"
                    )));
                }
            }
        }
    }
    if opts.mode == NumericMode::Flt && parameters(model).iter().any(|&p| !(p as f32).is_finite()) {
        return Err(CodegenError::Unsupported(
            "parameter outside single-precision range".to_string(),
        ));
    }
    Ok(())
}

fn prepare(model: &ModelIR, opts: &GenOptions) -> Result<(), CodegenError> {
    let violations = validate(model);
    if !violations.is_empty() {
        return Err(CodegenError::InvalidModel(violations));
    }
    opts.check(model.family())?;
    check_supported(model, opts)
}

/// Flash and SRAM use of the code [`generate`] would emit.
pub fn memory_estimate(model: &ModelIR, opts: &GenOptions) -> Result<MemoryEstimate, CodegenError> {
    prepare(model, opts)?;
    Ok(estimate(model, opts))
}

/// [`memory_estimate`] without validation, for configurations the engine
/// can run but the emitter refuses (such as the exact sigmoid in 8 bits).
pub fn estimate_unchecked(model: &ModelIR, opts: &GenOptions) -> MemoryEstimate {
    estimate(model, opts)
}

fn estimate(model: &ModelIR, opts: &GenOptions) -> MemoryEstimate {
    let elem = opts.mode.elem_bytes();
    let params = model.stats().param_count;
    let (structural, sram) = match &model.payload {
        Payload::Tree(t) => {
            let table = crate::inference::TreeTable::from_tree(t);
            let structural = match effective_tree_style(model, opts) {
                Some(TreeStyle::Iterative) if table.n_internal > 0 => {
                    3 * table.n_internal * layout::tree_index_type(&table, model.n_features).1
                }
                _ => 0,
            };
            (structural, 0)
        }
        Payload::Linear(l) => (0, l.weights.len() * elem),
        Payload::Mlp(m) => (0, 2 * m.max_layer_width() * elem),
        Payload::KernelSvm(s) => {
            let m = s.machines.len();
            let class_bytes = layout::index_type(model.n_classes() - 1).1;
            let start_bytes = layout::index_type(s.support_vector_total()).1;
            (2 * m * class_bytes + (m + 1) * start_bytes, model.n_classes() * 4)
        }
    };
    MemoryEstimate {
        flash_const_bytes: params * elem + structural,
        sram_bytes: sram,
        elem_bytes: elem,
    }
}

fn needs_exp(model: &ModelIR, opts: &GenOptions) -> bool {
    match &model.payload {
        Payload::Mlp(m) => {
            opts.sigmoid_or_default() == SigmoidVariant::Exact
                && m.layers.iter().any(|l| l.activation == Activation::Sigmoid)
        }
        Payload::KernelSvm(s) => matches!(s.kernel, Kernel::Rbf { .. }),
        _ => false,
    }
}

fn needs_pow(model: &ModelIR) -> bool {
    matches!(&model.payload, Payload::KernelSvm(s) if matches!(s.kernel, Kernel::Poly { .. }))
}

fn header(model: &ModelIR, opts: &GenOptions, style: Option<TreeStyle>) -> String {
    let p = &opts.symbol_prefix;
    let elem = match opts.mode {
        NumericMode::Flt => "float".to_string(),
        NumericMode::Fxp(_) => format!("{p}_fxp_t"),
    };
    let mut h = String::from("/*\n * Generated classifier. Do not edit.\n");
    h.push_str(&format!(" * model: {}\n", model.fingerprint()));
    h.push_str(&format!(
        " * family: {}, features: {}, classes: {}\n",
        model.family(),
        model.n_features,
        model.n_classes()
    ));
    h.push_str(&format!(" * numeric mode: {}\n", opts.mode));
    if let Some(s) = style {
        h.push_str(&format!(" * tree style: {s}\n"));
    }
    if model.family() == Family::Mlp {
        h.push_str(&format!(" * sigmoid: {}\n", opts.sigmoid_or_default()));
    }
    h.push_str(&format!(" * entry point: int32_t {p}_classify(const {elem}* x)\n"));
    match opts.mode {
        NumericMode::Flt => h.push_str(" * compile with -ffp-contract=off\n"),
        NumericMode::Fxp(_) => h.push_str(&format!(" * convert features with {p}_to_fixed\n")),
    }
    h.push_str(" */\n#include <stdint.h>\n\n");
    h
}

/// Emits the classifier source for `model`.
pub fn generate(model: &ModelIR, opts: &GenOptions) -> Result<GeneratedSource, CodegenError> {
    prepare(model, opts)?;
    let mut warnings = Vec::new();
    let style = effective_tree_style(model, opts);
    if style.is_some() && style != Some(opts.tree_style_or_default()) {
        warnings.push(format!(
            "tree deeper than {IF_ELSE_MAX_DEPTH} levels emitted in iterative style instead of if/else"
        ));
    }
    let ops = Ops {
        prefix: opts.symbol_prefix.clone(),
        mode: opts.mode,
    };
    let p = ops.prefix.as_str();
    let shape = Shape {
        n_features: model.n_features,
        n_classes: model.n_classes(),
    };
    let hook = opts.emit_test_hook;

    let mut text = header(model, opts, style);
    match opts.mode {
        NumericMode::Fxp(q) => {
            text.push_str(&gen_fixedpoint_runtime(q, p));
            text.push('\n');
        }
        NumericMode::Flt => {
            if needs_exp(model, opts) {
                text.push_str(&runtime::float_exp(p));
                text.push('\n');
            }
            if needs_pow(model) {
                text.push_str(&runtime::float_pow(p));
                text.push('\n');
            }
        }
    }
    text.push_str(&match &model.payload {
        Payload::Tree(t) => tree::gen_tree(t, shape, style.unwrap_or_default(), &ops, hook),
        Payload::Linear(l) => linear::gen_linear(l, shape, &ops, hook),
        Payload::Mlp(m) => mlp::gen_mlp(m, shape, opts.sigmoid_or_default(), &ops, hook),
        Payload::KernelSvm(s) => svm::gen_svm(s, shape, &ops, hook),
    });

    Ok(GeneratedSource {
        text,
        memory: estimate(model, opts),
        options_echo: opts.clone(),
        model_fingerprint: model.fingerprint(),
        warnings,
    })
}
