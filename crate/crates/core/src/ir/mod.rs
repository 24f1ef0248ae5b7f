//! Library-neutral representation of one trained classifier.
//!
//! Models enter the toolkit as JSON interchange documents (see [`schema`]) and
//! are held in memory as a [`ModelIR`]. Every downstream stage assumes the IR
//! has passed [`validate`]; [`parse_model`] never hands out one that has not.

mod schema;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use schema::{parse_model, to_json, to_json_pretty, SCHEMA_VERSION};
pub use validate::{validate, Violation};

/// Errors raised while turning an interchange document into a [`ModelIR`].
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    /// A field is missing, ill-typed or the document is not JSON at all.
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    /// The document parsed but the model breaks one or more invariants.
    #[error("invalid model: {}", join_violations(.0))]
    Structure(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Model family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Tree,
    Linear,
    Mlp,
    KernelSvm,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Tree => "tree",
            Family::Linear => "linear",
            Family::Mlp => "mlp",
            Family::KernelSvm => "kernel_svm",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A validated classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelIR {
    pub n_features: usize,
    pub class_labels: Vec<String>,
    pub metadata: BTreeMap<String, String>,
    pub payload: Payload,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Tree(TreeModel),
    Linear(LinearModel),
    Mlp(MlpModel),
    KernelSvm(KernelSvmModel),
}

impl ModelIR {
    pub fn family(&self) -> Family {
        match self.payload {
            Payload::Tree(_) => Family::Tree,
            Payload::Linear(_) => Family::Linear,
            Payload::Mlp(_) => Family::Mlp,
            Payload::KernelSvm(_) => Family::KernelSvm,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn stats(&self) -> ModelStats {
        model_stats(self)
    }

    /// Hex SHA-256 of the canonical compact serialization.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(to_json(self).as_bytes());
        hex::encode(h.finalize())
    }
}

/// Binary decision tree stored in topological order; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    pub nodes: Vec<TreeNode>,
}

/// Split nodes send `x` left iff `x[feature] <= threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class: usize,
    },
}

impl TreeModel {
    pub fn internal_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Split { .. }))
            .count()
    }

    /// Longest root-to-leaf path counted in split nodes.
    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        let mut max = 0;
        for (i, node) in self.nodes.iter().enumerate() {
            if let TreeNode::Split { left, right, .. } = *node {
                let d = depth[i] + 1;
                max = max.max(d);
                if let Some(slot) = depth.get_mut(left) {
                    *slot = d;
                }
                if let Some(slot) = depth.get_mut(right) {
                    *slot = d;
                }
            }
        }
        max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreRule {
    /// One row per class, predicted class is the argmax of the scores.
    ArgmaxLinear,
    /// Two classes, one weight row; positive score means class 1.
    BinarySign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// Row-major, one row per class (or a single row for `BinarySign`).
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub score_rule: ScoreRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Relu,
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `out × in`, row `i` feeds output neuron `i`.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn outputs(&self) -> usize {
        self.weights.len()
    }

    pub fn inputs(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<DenseLayer>,
}

impl MlpModel {
    /// Widest layer output; both ping-pong buffers are this long.
    pub fn max_layer_width(&self) -> usize {
        self.layers.iter().map(DenseLayer::outputs).max().unwrap_or(0)
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::outputs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Poly { gamma: f64, coef0: f64, degree: u32 },
    Rbf { gamma: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMachine {
    pub class_a: usize,
    pub class_b: usize,
    pub support_vectors: Vec<Vec<f64>>,
    pub dual_coefs: Vec<f64>,
    pub intercept: f64,
}

/// One-vs-one kernel SVM.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSvmModel {
    pub kernel: Kernel,
    pub machines: Vec<BinaryMachine>,
}

impl KernelSvmModel {
    pub fn support_vector_total(&self) -> usize {
        self.machines.iter().map(|m| m.support_vectors.len()).sum()
    }
}

/// Size summary of a model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelStats {
    /// Every stored real: weights, biases, thresholds, support vectors, dual
    /// coefficients and intercepts. Kernel hyperparameters are not counted.
    pub param_count: usize,
    pub node_count: usize,
    pub max_layer_width: usize,
    pub support_vector_total: usize,
}

pub fn model_stats(model: &ModelIR) -> ModelStats {
    let mut s = ModelStats::default();
    match &model.payload {
        Payload::Tree(t) => {
            s.node_count = t.nodes.len();
            s.param_count = t.internal_count();
        }
        Payload::Linear(l) => {
            s.param_count = l.weights.iter().map(Vec::len).sum::<usize>() + l.bias.len();
        }
        Payload::Mlp(m) => {
            s.max_layer_width = m.max_layer_width();
            s.param_count = m
                .layers
                .iter()
                .map(|l| l.weights.iter().map(Vec::len).sum::<usize>() + l.bias.len())
                .sum();
        }
        Payload::KernelSvm(k) => {
            s.support_vector_total = k.support_vector_total();
            s.param_count = k
                .machines
                .iter()
                .map(|m| m.support_vectors.iter().map(Vec::len).sum::<usize>() + m.dual_coefs.len() + 1)
                .sum();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(k: usize, d: usize) -> ModelIR {
        ModelIR {
            n_features: d,
            class_labels: (0..k).map(|i| format!("c{i}")).collect(),
            metadata: BTreeMap::new(),
            payload: Payload::Linear(LinearModel {
                weights: vec![vec![0.5; d]; k],
                bias: vec![0.1; k],
                score_rule: ScoreRule::ArgmaxLinear,
            }),
        }
    }

    #[test]
    fn linear_param_count() {
        assert_eq!(model_stats(&linear(3, 4)).param_count, 15);
    }

    #[test]
    fn mlp_param_count_and_width() {
        let layer = |o: usize, i: usize| DenseLayer {
            weights: vec![vec![0.0; i]; o],
            bias: vec![0.0; o],
            activation: Activation::Sigmoid,
        };
        let m = ModelIR {
            n_features: 4,
            class_labels: vec!["a".into(), "b".into(), "c".into()],
            metadata: BTreeMap::new(),
            payload: Payload::Mlp(MlpModel {
                layers: vec![layer(5, 4), layer(3, 5)],
            }),
        };
        let s = model_stats(&m);
        assert_eq!(s.param_count, 43);
        assert_eq!(s.max_layer_width, 5);
    }

    #[test]
    fn stats_ignore_label_names() {
        let a = linear(3, 4);
        let mut b = a.clone();
        b.class_labels = vec!["x".into(), "y".into(), "z".into()];
        assert_eq!(model_stats(&a), model_stats(&b));
    }

    #[test]
    fn tree_depth() {
        let t = TreeModel {
            nodes: vec![
                TreeNode::Split {
                    feature: 0,
                    threshold: 1.0,
                    left: 1,
                    right: 2,
                },
                TreeNode::Leaf { class: 0 },
                TreeNode::Split {
                    feature: 0,
                    threshold: 2.0,
                    left: 3,
                    right: 4,
                },
                TreeNode::Leaf { class: 1 },
                TreeNode::Leaf { class: 0 },
            ],
        };
        assert_eq!(t.depth(), 2);
        assert_eq!(t.internal_count(), 2);
    }
}
