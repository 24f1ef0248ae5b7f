//! Reference prediction engine.
//!
//! [`Engine`] executes any [`ModelIR`] in 32-bit float or Qn.m fixed point
//! with the same operation order the generated C++ uses, so host predictions
//! and on-device predictions agree bit for bit. Parameters are converted to
//! the active number type once, when the engine is built; features are
//! narrowed to `f32` and (in fixed point) converted at the entry of every
//! prediction.
//!
//! Ties in every argmax and vote go to the lowest class index.

mod arith;
pub(crate) mod float_math;
mod sigmoid;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::fixedpoint::{OpCounters, QFormat};
use crate::ir::{Activation, Family, Kernel, ModelIR, Payload, ScoreRule};

use arith::{Arith, FixedArith, FloatArith};
use sigmoid::SigmoidConsts;

pub use float_math::flt_exp;
pub use sigmoid::SigmoidVariant;
pub(crate) use sigmoid::{PWL4_MID_SLOPE, PWL4_OUTER_SLOPE};
pub use tree::{TreeStyle, TreeTable, IF_ELSE_MAX_DEPTH};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InferenceError {
    #[error("feature vector has {found} values, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operation needs a {expected} model, got {found}")]
    WrongFamily { expected: Family, found: Family },
}

/// Number representation used for every arithmetic operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum NumericMode {
    /// IEEE-754 single precision.
    Flt,
    Fxp(QFormat),
}

impl NumericMode {
    pub const FXP32: NumericMode = NumericMode::Fxp(QFormat::Q22_10);
    pub const FXP16: NumericMode = NumericMode::Fxp(QFormat::Q12_4);
    pub const FXP8: NumericMode = NumericMode::Fxp(QFormat::Q4_4);

    /// Bytes per stored parameter.
    pub fn elem_bytes(self) -> usize {
        match self {
            NumericMode::Flt => 4,
            NumericMode::Fxp(q) => q.storage_bytes(),
        }
    }

    pub fn qformat(self) -> Option<QFormat> {
        match self {
            NumericMode::Flt => None,
            NumericMode::Fxp(q) => Some(q),
        }
    }

    /// Default format for a fixed-point width.
    pub fn fxp_with_bits(bits: u32) -> Option<NumericMode> {
        match bits {
            32 => Some(Self::FXP32),
            16 => Some(Self::FXP16),
            8 => Some(Self::FXP8),
            _ => None,
        }
    }
}

impl fmt::Display for NumericMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumericMode::Flt => f.write_str("FLT"),
            NumericMode::Fxp(q) => write!(f, "FXP{}({q})", q.total_bits()),
        }
    }
}

impl FromStr for NumericMode {
    type Err = String;

    /// `flt`, `fxp32`, `fxp16`, `fxp8`, or a format with or without its width
    /// tag: `FXP32(Q22.10)`, `Q22.10`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "flt" | "float" => return Ok(NumericMode::Flt),
            "fxp32" => return Ok(Self::FXP32),
            "fxp16" => return Ok(Self::FXP16),
            "fxp8" => return Ok(Self::FXP8),
            _ => {}
        }
        let inner = match (lower.find('('), lower.strip_suffix(')')) {
            (Some(open), Some(body)) => &body[open + 1..],
            _ => lower.as_str(),
        };
        inner
            .parse::<QFormat>()
            .map(NumericMode::Fxp)
            .map_err(|_| format!("unknown numeric mode {s:?} (flt, fxp32, fxp16, fxp8 or Qn.m)"))
    }
}

impl From<NumericMode> for String {
    fn from(m: NumericMode) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for NumericMode {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Result of one prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class_index: usize,
    /// K decision values whose argmax is `class_index`. Linear and MLP models
    /// report their outputs; binary models report `[threshold, score]`; trees
    /// report a one-hot vector and kernel SVMs report vote counts.
    pub scores: Vec<f64>,
    /// Raw fixed-point integers behind `scores` (counts for trees and SVMs);
    /// `None` in float mode.
    pub raw_scores: Option<Vec<i64>>,
    pub counters: OpCounters,
}

/// Knobs that select how a model is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineConfig {
    pub mode: NumericMode,
    /// Used wherever a layer has sigmoid activation.
    pub sigmoid: SigmoidVariant,
    pub tree_style: TreeStyle,
}

impl EngineConfig {
    pub fn new(mode: NumericMode) -> Self {
        EngineConfig {
            mode,
            sigmoid: SigmoidVariant::Exact,
            tree_style: TreeStyle::Iterative,
        }
    }

    pub fn with_sigmoid(mut self, v: SigmoidVariant) -> Self {
        self.sigmoid = v;
        self
    }

    pub fn with_tree_style(mut self, s: TreeStyle) -> Self {
        self.tree_style = s;
        self
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

struct PreparedLayer<V> {
    weights: Vec<Vec<V>>,
    bias: Vec<V>,
    activation: Activation,
}

struct PreparedMachine<V> {
    class_a: usize,
    class_b: usize,
    support_vectors: Vec<Vec<V>>,
    dual_coefs: Vec<V>,
    intercept: V,
}

enum PreparedKernel<V> {
    Poly { gamma: V, coef0: V, degree: u32 },
    Rbf { gamma: V },
}

enum Prepared<V> {
    Tree {
        table: TreeTable,
        thresholds: Vec<V>,
        nodes: Vec<tree::PreparedNode<V>>,
        style: TreeStyle,
    },
    Linear {
        weights: Vec<Vec<V>>,
        bias: Vec<V>,
        rule: ScoreRule,
    },
    Mlp {
        layers: Vec<PreparedLayer<V>>,
        width: usize,
        sigmoid: SigmoidVariant,
        consts: SigmoidConsts<V>,
    },
    Svm {
        kernel: PreparedKernel<V>,
        machines: Vec<PreparedMachine<V>>,
    },
}

struct Typed<A: Arith> {
    arith: A,
    model: Prepared<A::V>,
    n_features: usize,
    n_classes: usize,
    param_counters: OpCounters,
}

enum EngineKind {
    Float(Typed<FloatArith>),
    Fixed(Typed<FixedArith>),
}

/// A model with its parameters converted to one numeric mode.
pub struct Engine {
    kind: EngineKind,
    config: EngineConfig,
}

fn param_counters(model: &ModelIR, mode: NumericMode) -> OpCounters {
    let mut c = OpCounters::default();
    if let NumericMode::Fxp(q) = mode {
        for p in crate::codegen::layout::parameters(model) {
            crate::fixedpoint::kernels::to_fixed(p, q, &mut c);
        }
    }
    c
}

fn prepare<A: Arith>(arith: A, model: &ModelIR, cfg: &EngineConfig) -> Typed<A> {
    let a = &arith;
    let row = |r: &Vec<f64>| r.iter().map(|&x| a.constant(x)).collect::<Vec<_>>();
    let prepared = match &model.payload {
        Payload::Tree(t) => {
            let table = TreeTable::from_tree(t);
            let thresholds = table.thresholds.iter().map(|&x| a.constant(x)).collect();
            let nodes = tree::prepare_nodes(t, a);
            let style = if cfg.tree_style == TreeStyle::IfElse && t.depth() > IF_ELSE_MAX_DEPTH {
                TreeStyle::Iterative
            } else {
                cfg.tree_style
            };
            Prepared::Tree {
                table,
                thresholds,
                nodes,
                style,
            }
        }
        Payload::Linear(l) => Prepared::Linear {
            weights: l.weights.iter().map(row).collect(),
            bias: row(&l.bias),
            rule: l.score_rule,
        },
        Payload::Mlp(m) => Prepared::Mlp {
            layers: m
                .layers
                .iter()
                .map(|l| PreparedLayer {
                    weights: l.weights.iter().map(row).collect(),
                    bias: row(&l.bias),
                    activation: l.activation,
                })
                .collect(),
            width: m.max_layer_width(),
            sigmoid: cfg.sigmoid,
            consts: SigmoidConsts::new(a),
        },
        Payload::KernelSvm(s) => Prepared::Svm {
            kernel: match s.kernel {
                Kernel::Poly { gamma, coef0, degree } => PreparedKernel::Poly {
                    gamma: a.constant(gamma),
                    coef0: a.constant(coef0),
                    degree,
                },
                Kernel::Rbf { gamma } => PreparedKernel::Rbf {
                    gamma: a.constant(gamma),
                },
            },
            machines: s
                .machines
                .iter()
                .map(|m| PreparedMachine {
                    class_a: m.class_a,
                    class_b: m.class_b,
                    support_vectors: m.support_vectors.iter().map(row).collect(),
                    dual_coefs: row(&m.dual_coefs),
                    intercept: a.constant(m.intercept),
                })
                .collect(),
        },
    };
    let param_counters = param_counters(model, cfg.mode);
    Typed {
        arith,
        model: prepared,
        n_features: model.n_features,
        n_classes: model.n_classes(),
        param_counters,
    }
}

impl Engine {
    /// Prepares `model` for repeated predictions. The model must validate.
    pub fn new(model: &ModelIR, config: EngineConfig) -> Self {
        let kind = match config.mode {
            NumericMode::Flt => EngineKind::Float(prepare(FloatArith, model, &config)),
            NumericMode::Fxp(q) => EngineKind::Fixed(prepare(FixedArith::new(q), model, &config)),
        };
        Engine { kind, config }
    }

    pub fn config(&self) -> EngineConfig {
        self.config
    }

    /// Saturation/underflow events from converting the parameters themselves.
    pub fn param_counters(&self) -> OpCounters {
        match &self.kind {
            EngineKind::Float(t) => t.param_counters,
            EngineKind::Fixed(t) => t.param_counters,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction, InferenceError> {
        match &self.kind {
            EngineKind::Float(t) => t.predict(x),
            EngineKind::Fixed(t) => t.predict(x),
        }
    }

    /// Per-machine decision values of a kernel SVM, in machine order.
    pub fn svm_decision_values(&self, x: &[f64]) -> Result<Vec<f64>, InferenceError> {
        match &self.kind {
            EngineKind::Float(t) => t.svm_decision_values(x),
            EngineKind::Fixed(t) => t.svm_decision_values(x),
        }
    }
}

impl<A: Arith> Typed<A> {
    fn inputs(&self, a: &mut A, x: &[f64]) -> Result<Vec<A::V>, InferenceError> {
        if x.len() != self.n_features {
            return Err(InferenceError::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(x.iter().map(|&v| a.input(v)).collect())
    }

    fn finish(&self, a: &A, class_index: usize, values: Vec<A::V>) -> Prediction {
        Prediction {
            class_index,
            scores: values.iter().map(|&v| a.real(v)).collect(),
            raw_scores: values.iter().map(|&v| a.raw(v)).collect(),
            counters: a.counters(),
        }
    }

    fn counts(&self, a: &A, class_index: usize, counts: Vec<u32>) -> Prediction {
        Prediction {
            class_index,
            scores: counts.iter().map(|&c| c as f64).collect(),
            raw_scores: a.raw(a.zero()).map(|_| counts.iter().map(|&c| c as i64).collect()),
            counters: a.counters(),
        }
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction, InferenceError> {
        let mut a = self.arith.fresh();
        let xs = self.inputs(&mut a, x)?;
        let k = self.n_classes;
        Ok(match &self.model {
            Prepared::Tree {
                table,
                thresholds,
                nodes,
                style,
            } => {
                let class = match style {
                    TreeStyle::Iterative => table.walk(|f, i| a.le(xs[f], thresholds[i])),
                    TreeStyle::IfElse => tree::walk_nested(nodes, 0, &|f, t| a.le(xs[f], t)),
                };
                let mut onehot = vec![0u32; k];
                onehot[class] = 1;
                self.counts(&a, class, onehot)
            }
            Prepared::Linear { weights, bias, rule } => {
                let scores: Vec<A::V> = weights
                    .iter()
                    .zip(bias)
                    .map(|(w, &b)| {
                        let mut acc = b;
                        for (&wj, &xj) in w.iter().zip(&xs) {
                            let p = a.mul(wj, xj);
                            acc = a.add(acc, p);
                        }
                        acc
                    })
                    .collect();
                match rule {
                    ScoreRule::ArgmaxLinear => {
                        let class = self.argmax_v(&a, &scores);
                        self.finish(&a, class, scores)
                    }
                    ScoreRule::BinarySign => {
                        let s = scores[0];
                        let class = usize::from(a.gt(s, a.zero()));
                        self.finish(&a, class, vec![a.zero(), s])
                    }
                }
            }
            Prepared::Mlp {
                layers,
                width,
                sigmoid,
                consts,
            } => {
                let out = mlp_forward(&mut a, layers, *width, *sigmoid, consts, &xs);
                let last = layers.last().expect("validated MLP has layers");
                if out.len() == 1 {
                    let thr = if last.activation == Activation::Sigmoid {
                        consts.half
                    } else {
                        a.zero()
                    };
                    let class = usize::from(a.gt(out[0], thr));
                    self.finish(&a, class, vec![thr, out[0]])
                } else {
                    let class = self.argmax_v(&a, &out);
                    self.finish(&a, class, out)
                }
            }
            Prepared::Svm { kernel, machines } => {
                let mut votes = vec![0u32; k];
                for m in machines {
                    let s = machine_value(&mut a, kernel, m, &xs);
                    if a.gt(s, a.zero()) {
                        votes[m.class_a] += 1;
                    } else {
                        votes[m.class_b] += 1;
                    }
                }
                let class = argmax(&votes);
                self.counts(&a, class, votes)
            }
        })
    }

    fn argmax_v(&self, a: &A, v: &[A::V]) -> usize {
        let mut best = 0;
        for i in 1..v.len() {
            if a.gt(v[i], v[best]) {
                best = i;
            }
        }
        best
    }

    fn svm_decision_values(&self, x: &[f64]) -> Result<Vec<f64>, InferenceError> {
        let Prepared::Svm { kernel, machines } = &self.model else {
            return Err(InferenceError::WrongFamily {
                expected: Family::KernelSvm,
                found: self.family(),
            });
        };
        let mut a = self.arith.fresh();
        let xs = self.inputs(&mut a, x)?;
        Ok(machines
            .iter()
            .map(|m| {
                let s = machine_value(&mut a, kernel, m, &xs);
                a.real(s)
            })
            .collect())
    }

    fn family(&self) -> Family {
        match self.model {
            Prepared::Tree { .. } => Family::Tree,
            Prepared::Linear { .. } => Family::Linear,
            Prepared::Mlp { .. } => Family::Mlp,
            Prepared::Svm { .. } => Family::KernelSvm,
        }
    }
}

/// Forward pass through two ping-pong buffers of `width` values each. The
/// first layer reads the input vector directly.
fn mlp_forward<A: Arith>(
    a: &mut A,
    layers: &[PreparedLayer<A::V>],
    width: usize,
    variant: SigmoidVariant,
    consts: &SigmoidConsts<A::V>,
    xs: &[A::V],
) -> Vec<A::V> {
    let mut cur = vec![a.zero(); width];
    let mut next = vec![a.zero(); width];
    let mut len = 0;
    for (li, layer) in layers.iter().enumerate() {
        let src: &[A::V] = if li == 0 { xs } else { &cur[..len] };
        for (o, (w, &b)) in layer.weights.iter().zip(&layer.bias).enumerate() {
            let mut acc = b;
            for (&wj, &xj) in w.iter().zip(src) {
                let p = a.mul(wj, xj);
                acc = a.add(acc, p);
            }
            next[o] = match layer.activation {
                Activation::Identity => acc,
                Activation::Relu => {
                    if a.gt(acc, a.zero()) {
                        acc
                    } else {
                        a.zero()
                    }
                }
                Activation::Sigmoid => sigmoid::sigmoid(a, acc, variant, consts),
            };
        }
        len = layer.bias.len();
        std::mem::swap(&mut cur, &mut next);
    }
    cur.truncate(len);
    cur
}

fn machine_value<A: Arith>(a: &mut A, kernel: &PreparedKernel<A::V>, m: &PreparedMachine<A::V>, xs: &[A::V]) -> A::V {
    let mut s = a.zero();
    for (sv, &coef) in m.support_vectors.iter().zip(&m.dual_coefs) {
        let k = match *kernel {
            PreparedKernel::Poly { gamma, coef0, degree } => {
                let mut dot = a.zero();
                for (&u, &v) in sv.iter().zip(xs) {
                    let p = a.mul(u, v);
                    dot = a.add(dot, p);
                }
                let g = a.mul(gamma, dot);
                let t = a.add(g, coef0);
                a.pow_int(t, degree)
            }
            PreparedKernel::Rbf { gamma } => {
                let mut d2 = a.zero();
                for (&u, &v) in sv.iter().zip(xs) {
                    let diff = a.sub(u, v);
                    let sq = a.mul(diff, diff);
                    d2 = a.add(d2, sq);
                }
                let g = a.mul(gamma, d2);
                let ng = a.neg(g);
                a.exp(ng)
            }
        };
        let term = a.mul(coef, k);
        s = a.add(s, term);
    }
    a.add(s, m.intercept)
}

fn check_family(model: &ModelIR, expected: Family) -> Result<(), InferenceError> {
    if model.family() == expected {
        Ok(())
    } else {
        Err(InferenceError::WrongFamily {
            expected,
            found: model.family(),
        })
    }
}

/// One-shot prediction of any family. Prefer [`Engine`] for many inputs.
pub fn predict(model: &ModelIR, x: &[f64], config: EngineConfig) -> Result<Prediction, InferenceError> {
    Engine::new(model, config).predict(x)
}

pub fn predict_tree(
    model: &ModelIR,
    x: &[f64],
    mode: NumericMode,
    style: TreeStyle,
) -> Result<Prediction, InferenceError> {
    check_family(model, Family::Tree)?;
    predict(model, x, EngineConfig::new(mode).with_tree_style(style))
}

pub fn predict_linear(model: &ModelIR, x: &[f64], mode: NumericMode) -> Result<Prediction, InferenceError> {
    check_family(model, Family::Linear)?;
    predict(model, x, EngineConfig::new(mode))
}

pub fn predict_mlp(
    model: &ModelIR,
    x: &[f64],
    mode: NumericMode,
    variant: SigmoidVariant,
) -> Result<Prediction, InferenceError> {
    check_family(model, Family::Mlp)?;
    predict(model, x, EngineConfig::new(mode).with_sigmoid(variant))
}

pub fn predict_svm_kernel(model: &ModelIR, x: &[f64], mode: NumericMode) -> Result<Prediction, InferenceError> {
    check_family(model, Family::KernelSvm)?;
    predict(model, x, EngineConfig::new(mode))
}

/// Sigmoid variant evaluated in `mode`; in fixed point `x` is converted to
/// the format first and the result converted back exactly.
pub fn sigmoid_eval(x: f64, variant: SigmoidVariant, mode: NumericMode) -> f64 {
    match mode {
        NumericMode::Flt => sigmoid_f32(x as f32, variant) as f64,
        NumericMode::Fxp(q) => {
            let mut ctx = crate::fixedpoint::EvalContext::new();
            let v = ctx.to_fixed(x, q);
            sigmoid_fixed(v, variant, &mut ctx).value()
        }
    }
}

pub fn sigmoid_f32(x: f32, variant: SigmoidVariant) -> f32 {
    let mut a = FloatArith;
    let k = SigmoidConsts::new(&a);
    sigmoid::sigmoid(&mut a, x, variant, &k)
}

/// Fixed-point sigmoid; counters accumulate in `ctx`.
pub fn sigmoid_fixed(
    x: crate::fixedpoint::FixedValue,
    variant: SigmoidVariant,
    ctx: &mut crate::fixedpoint::EvalContext,
) -> crate::fixedpoint::FixedValue {
    let mut a = FixedArith::new(x.format());
    let k = SigmoidConsts::new(&a);
    let y = sigmoid::sigmoid(&mut a, x.raw(), variant, &k);
    ctx.absorb(&a.counters);
    crate::fixedpoint::FixedValue::new_unchecked(y, x.format())
}
