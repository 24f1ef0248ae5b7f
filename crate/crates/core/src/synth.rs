//! Random models and inputs for property tests, fuzzing and benchmarks.
//!
//! Every generator is driven by a caller-supplied RNG, so a seeded
//! `ChaCha8Rng` reproduces the same models on every platform.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::ir::{
    Activation, BinaryMachine, DenseLayer, Kernel, KernelSvmModel, LinearModel, MlpModel, ModelIR, Payload, ScoreRule,
    TreeModel, TreeNode,
};

fn labels(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("c{i}")).collect()
}

fn wrap(n_features: usize, n_classes: usize, payload: Payload) -> ModelIR {
    ModelIR {
        n_features,
        class_labels: labels(n_classes),
        metadata: BTreeMap::new(),
        payload,
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    rng.gen_range(-scale..=scale)
}

/// Feature vector with entries uniform in `[-scale, scale]`.
pub fn random_input<R: Rng + ?Sized>(rng: &mut R, n_features: usize, scale: f64) -> Vec<f64> {
    (0..n_features).map(|_| uniform(rng, scale)).collect()
}

/// Random binary tree of depth at most `max_depth`; splits stop early with
/// probability 0.25 per node below the root.
pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, n_features: usize, n_classes: usize, max_depth: usize) -> ModelIR {
    fn build<R: Rng + ?Sized>(
        rng: &mut R,
        nodes: &mut Vec<TreeNode>,
        depth: usize,
        max: usize,
        d: usize,
        k: usize,
    ) -> usize {
        let id = nodes.len();
        if depth >= max || (depth > 0 && rng.gen_bool(0.25)) {
            nodes.push(TreeNode::Leaf {
                class: rng.gen_range(0..k),
            });
            return id;
        }
        nodes.push(TreeNode::Leaf { class: 0 });
        let feature = rng.gen_range(0..d);
        let threshold = uniform(rng, 4.0);
        let left = build(rng, nodes, depth + 1, max, d, k);
        let right = build(rng, nodes, depth + 1, max, d, k);
        nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
    let mut nodes = Vec::new();
    build(rng, &mut nodes, 0, max_depth, n_features, n_classes);
    wrap(n_features, n_classes, Payload::Tree(TreeModel { nodes }))
}

/// Dense linear model; `binary` selects the single-row sign rule (K = 2).
pub fn random_linear<R: Rng + ?Sized>(rng: &mut R, n_features: usize, n_classes: usize, binary: bool) -> ModelIR {
    let (rows, k, rule) = if binary {
        (1, 2, ScoreRule::BinarySign)
    } else {
        (n_classes, n_classes, ScoreRule::ArgmaxLinear)
    };
    let model = LinearModel {
        weights: (0..rows).map(|_| random_input(rng, n_features, 1.0)).collect(),
        bias: random_input(rng, rows, 0.5),
        score_rule: rule,
    };
    wrap(n_features, k, Payload::Linear(model))
}

/// Fully connected network with layer sizes `sizes[0] -> sizes[1] -> ...`.
/// Hidden layers use `hidden`, the output layer `output`.
pub fn random_mlp<R: Rng + ?Sized>(rng: &mut R, sizes: &[usize], hidden: Activation, output: Activation) -> ModelIR {
    assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
    let n_layers = sizes.len() - 1;
    let layers = (0..n_layers)
        .map(|i| {
            let (n_in, n_out) = (sizes[i], sizes[i + 1]);
            let scale = (3.0 / n_in as f64).sqrt();
            DenseLayer {
                weights: (0..n_out).map(|_| random_input(rng, n_in, scale)).collect(),
                bias: random_input(rng, n_out, 0.5),
                activation: if i + 1 == n_layers { output } else { hidden },
            }
        })
        .collect();
    let out = sizes[n_layers];
    let k = if out == 1 { 2 } else { out };
    wrap(sizes[0], k, Payload::Mlp(MlpModel { layers }))
}

/// One-vs-one kernel SVM with `sv_per_machine` support vectors per pair.
pub fn random_svm<R: Rng + ?Sized>(
    rng: &mut R,
    n_features: usize,
    n_classes: usize,
    kernel: Kernel,
    sv_per_machine: usize,
) -> ModelIR {
    let mut machines = Vec::new();
    for a in 0..n_classes {
        for b in a + 1..n_classes {
            machines.push(BinaryMachine {
                class_a: a,
                class_b: b,
                support_vectors: (0..sv_per_machine)
                    .map(|_| random_input(rng, n_features, 1.0))
                    .collect(),
                dual_coefs: random_input(rng, sv_per_machine, 1.0),
                intercept: uniform(rng, 0.5),
            });
        }
    }
    wrap(
        n_features,
        n_classes,
        Payload::KernelSvm(KernelSvmModel { kernel, machines }),
    )
}

/// A random model of any family with small dimensions.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R) -> ModelIR {
    let d = rng.gen_range(1..=8);
    let k = rng.gen_range(2..=5);
    match rng.gen_range(0..6) {
        0 => random_tree(rng, d, k, 6),
        1 => random_linear(rng, d, k, false),
        2 => random_linear(rng, d, 2, true),
        3 => {
            let hidden = rng.gen_range(1..=8);
            let act = *[Activation::Sigmoid, Activation::Relu, Activation::Identity]
                .choose(rng)
                .expect("non-empty");
            random_mlp(rng, &[d, hidden, k], act, Activation::Identity)
        }
        4 => {
            let kernel = Kernel::Rbf {
                gamma: rng.gen_range(0.05..1.0),
            };
            let n_sv = rng.gen_range(1..=4);
            random_svm(rng, d, k, kernel, n_sv)
        }
        _ => {
            let kernel = Kernel::Poly {
                gamma: rng.gen_range(0.1..1.0),
                coef0: uniform(rng, 1.0),
                degree: rng.gen_range(1..=3),
            };
            let n_sv = rng.gen_range(1..=4);
            random_svm(rng, d, k, kernel, n_sv)
        }
    }
}

/// Small fixed models covering every family and output rule, named for
/// reports.
pub fn toy_models() -> Vec<(&'static str, ModelIR)> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x70c1f);
    vec![
        ("tree_depth4", random_tree(&mut rng, 4, 3, 4)),
        ("linear_3x4", random_linear(&mut rng, 4, 3, false)),
        ("linear_binary", random_linear(&mut rng, 3, 2, true)),
        (
            "mlp_4_5_3_sigmoid",
            random_mlp(&mut rng, &[4, 5, 3], Activation::Sigmoid, Activation::Sigmoid),
        ),
        (
            "mlp_3_4_1_relu",
            random_mlp(&mut rng, &[3, 4, 1], Activation::Relu, Activation::Sigmoid),
        ),
        ("svm_rbf_3", random_svm(&mut rng, 3, 3, Kernel::Rbf { gamma: 0.5 }, 2)),
        (
            "svm_poly_2",
            random_svm(
                &mut rng,
                2,
                2,
                Kernel::Poly {
                    gamma: 0.5,
                    coef0: 1.0,
                    degree: 2,
                },
                3,
            ),
        ),
    ]
}
