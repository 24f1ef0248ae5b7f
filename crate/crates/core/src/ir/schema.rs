//! JSON interchange format.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "family": "tree",
//!   "n_features": 1,
//!   "classes": ["A", "B"],
//!   "payload": { "nodes": [
//!     {"feature": 0, "threshold": 2.5, "left": 1, "right": 2},
//!     {"leaf": "A"},
//!     {"leaf": 1}
//!   ]},
//!   "metadata": {"source": "sklearn 1.4"}
//! }
//! ```
//!
//! Leaves may name their class by label or by index. When `payload` is absent
//! the family fields are read from the top-level object. Unknown keys are
//! ignored everywhere.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    validate, Activation, BinaryMachine, DenseLayer, Family, Kernel, KernelSvmModel, LinearModel, MlpModel, ModelError,
    ModelIR, Payload, ScoreRule, TreeModel, TreeNode, Violation,
};

/// Major version written by [`to_json`] and accepted by [`parse_model`].
pub const SCHEMA_VERSION: u64 = 1;

#[derive(Deserialize)]
struct Header {
    family: Family,
    n_features: usize,
    classes: Vec<String>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct TreeDoc {
    nodes: Vec<NodeDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NodeDoc {
    Leaf {
        leaf: LeafRef,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LeafRef {
    Index(usize),
    Label(String),
}

#[derive(Serialize, Deserialize)]
struct LinearDoc {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    #[serde(default = "default_score_rule")]
    score_rule: ScoreRule,
}

fn default_score_rule() -> ScoreRule {
    ScoreRule::ArgmaxLinear
}

#[derive(Serialize, Deserialize)]
struct MlpDoc {
    layers: Vec<LayerDoc>,
}

#[derive(Serialize, Deserialize)]
struct LayerDoc {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: Activation,
}

#[derive(Serialize, Deserialize)]
struct SvmDoc {
    kernel: KernelDoc,
    #[serde(alias = "machines")]
    binary_machines: Vec<MachineDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum KernelDoc {
    Poly { gamma: f64, coef0: f64, degree: u32 },
    Rbf { gamma: f64 },
}

#[derive(Serialize, Deserialize)]
struct MachineDoc {
    class_a: usize,
    class_b: usize,
    support_vectors: Vec<Vec<f64>>,
    dual_coefs: Vec<f64>,
    intercept: f64,
}

#[derive(Serialize)]
struct DocOut<'a, P: Serialize> {
    schema_version: u64,
    family: Family,
    n_features: usize,
    classes: &'a [String],
    payload: P,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    metadata: &'a BTreeMap<String, String>,
}

fn schema_err(path: impl Into<String>, message: impl Into<String>) -> ModelError {
    ModelError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn decode<T: DeserializeOwned>(value: &Value, prefix: &str) -> Result<T, ModelError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix.is_empty(), inner.as_str()) {
            (true, _) => inner.clone(),
            (false, ".") => prefix.to_string(),
            (false, _) => format!("{prefix}.{inner}"),
        };
        schema_err(path, e.into_inner().to_string())
    })
}

fn check_version(doc: &serde_json::Map<String, Value>) -> Result<(), ModelError> {
    let Some(v) = doc.get("schema_version") else {
        return Ok(());
    };
    let major = match v {
        Value::Number(n) => n.as_f64().map(|f| f.trunc() as i64),
        Value::String(s) => s.split('.').next().and_then(|m| m.trim().parse().ok()),
        _ => None,
    };
    match major {
        Some(m) if m == SCHEMA_VERSION as i64 => Ok(()),
        Some(m) => Err(schema_err(
            "schema_version",
            format!("unsupported major version {m}, expected {SCHEMA_VERSION}"),
        )),
        None => Err(schema_err("schema_version", format!("not a version: {v}"))),
    }
}

/// Parses and validates one interchange document.
pub fn parse_model(text: &str) -> Result<ModelIR, ModelError> {
    let root: Value = serde_json::from_str(text).map_err(|e| schema_err("$", e.to_string()))?;
    let Value::Object(obj) = &root else {
        return Err(schema_err("$", "document must be a JSON object"));
    };
    check_version(obj)?;
    let header: Header = decode(&root, "")?;
    let (payload_value, prefix) = match obj.get("payload") {
        Some(p) => (p, "payload"),
        None => (&root, ""),
    };

    let mut violations = Vec::new();
    let payload = match header.family {
        Family::Tree => {
            let doc: TreeDoc = decode(payload_value, prefix)?;
            let nodes = doc
                .nodes
                .into_iter()
                .enumerate()
                .map(|(i, n)| match n {
                    NodeDoc::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => TreeNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    },
                    NodeDoc::Leaf { leaf } => {
                        let class = match leaf {
                            LeafRef::Index(c) => c,
                            LeafRef::Label(l) => match header.classes.iter().position(|c| *c == l) {
                                Some(c) => c,
                                None => {
                                    violations.push(Violation::new(
                                        "TreeNode",
                                        format!("nodes[{i}].leaf"),
                                        "class label declared",
                                        format!("unknown label {l:?}"),
                                    ));
                                    0
                                }
                            },
                        };
                        TreeNode::Leaf { class }
                    }
                })
                .collect();
            Payload::Tree(TreeModel { nodes })
        }
        Family::Linear => {
            let doc: LinearDoc = decode(payload_value, prefix)?;
            Payload::Linear(LinearModel {
                weights: doc.weights,
                bias: doc.bias,
                score_rule: doc.score_rule,
            })
        }
        Family::Mlp => {
            let doc: MlpDoc = decode(payload_value, prefix)?;
            Payload::Mlp(MlpModel {
                layers: doc
                    .layers
                    .into_iter()
                    .map(|l| DenseLayer {
                        weights: l.weights,
                        bias: l.bias,
                        activation: l.activation,
                    })
                    .collect(),
            })
        }
        Family::KernelSvm => {
            let doc: SvmDoc = decode(payload_value, prefix)?;
            let kernel = match doc.kernel {
                KernelDoc::Poly { gamma, coef0, degree } => Kernel::Poly { gamma, coef0, degree },
                KernelDoc::Rbf { gamma } => Kernel::Rbf { gamma },
            };
            Payload::KernelSvm(KernelSvmModel {
                kernel,
                machines: doc
                    .binary_machines
                    .into_iter()
                    .map(|m| BinaryMachine {
                        class_a: m.class_a,
                        class_b: m.class_b,
                        support_vectors: m.support_vectors,
                        dual_coefs: m.dual_coefs,
                        intercept: m.intercept,
                    })
                    .collect(),
            })
        }
    };

    let model = ModelIR {
        n_features: header.n_features,
        class_labels: header.classes,
        metadata: header.metadata,
        payload,
    };
    violations.extend(validate(&model));
    if violations.is_empty() {
        Ok(model)
    } else {
        Err(ModelError::Structure(violations))
    }
}

fn to_value(model: &ModelIR) -> Value {
    fn doc<P: Serialize>(model: &ModelIR, payload: P) -> Value {
        serde_json::to_value(DocOut {
            schema_version: SCHEMA_VERSION,
            family: model.family(),
            n_features: model.n_features,
            classes: &model.class_labels,
            payload,
            metadata: &model.metadata,
        })
        .expect("interchange document serializes")
    }
    match &model.payload {
        Payload::Tree(t) => doc(
            model,
            TreeDoc {
                nodes: t
                    .nodes
                    .iter()
                    .map(|n| match *n {
                        TreeNode::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => NodeDoc::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        },
                        TreeNode::Leaf { class } => NodeDoc::Leaf {
                            leaf: LeafRef::Index(class),
                        },
                    })
                    .collect(),
            },
        ),
        Payload::Linear(l) => doc(
            model,
            LinearDoc {
                weights: l.weights.clone(),
                bias: l.bias.clone(),
                score_rule: l.score_rule,
            },
        ),
        Payload::Mlp(m) => doc(
            model,
            MlpDoc {
                layers: m
                    .layers
                    .iter()
                    .map(|l| LayerDoc {
                        weights: l.weights.clone(),
                        bias: l.bias.clone(),
                        activation: l.activation,
                    })
                    .collect(),
            },
        ),
        Payload::KernelSvm(k) => doc(
            model,
            SvmDoc {
                kernel: match k.kernel {
                    Kernel::Poly { gamma, coef0, degree } => KernelDoc::Poly { gamma, coef0, degree },
                    Kernel::Rbf { gamma } => KernelDoc::Rbf { gamma },
                },
                binary_machines: k
                    .machines
                    .iter()
                    .map(|m| MachineDoc {
                        class_a: m.class_a,
                        class_b: m.class_b,
                        support_vectors: m.support_vectors.clone(),
                        dual_coefs: m.dual_coefs.clone(),
                        intercept: m.intercept,
                    })
                    .collect(),
            },
        ),
    }
}

/// Canonical compact serialization; the model fingerprint hashes this text.
pub fn to_json(model: &ModelIR) -> String {
    to_value(model).to_string()
}

pub fn to_json_pretty(model: &ModelIR) -> String {
    serde_json::to_string_pretty(&to_value(model)).expect("interchange document serializes")
}
