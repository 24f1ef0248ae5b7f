//! Brute-force evaluation in double precision, written directly from the
//! model definitions. Each function returns the predicted class together
//! with its decision margin: how far the closest competing decision is.

use tinyclf_core::ir::{Activation, Kernel, ModelIR, Payload, ScoreRule, TreeNode};
use tinyclf_core::SigmoidVariant;

pub struct Verdict {
    pub class: usize,
    pub margin: f64,
}

fn sigmoid(x: f64, v: SigmoidVariant) -> f64 {
    let exact = |t: f64| 1.0 / (1.0 + (-t).exp());
    match v {
        SigmoidVariant::Exact => exact(x),
        SigmoidVariant::Rational => 0.5 + 0.5 * x / (1.0 + x.abs()),
        SigmoidVariant::Pwl2 => (0.25 * x + 0.5).clamp(0.0, 1.0),
        SigmoidVariant::Pwl4 => {
            let a = x.abs();
            let y = if a <= 1.0 {
                0.5 + (exact(1.0) - 0.5) * a
            } else if a <= 4.0 {
                exact(1.0) + (exact(4.0) - exact(1.0)) / 3.0 * (a - 1.0)
            } else {
                exact(4.0)
            };
            if x >= 0.0 {
                y
            } else {
                1.0 - y
            }
        }
    }
}

/// First maximum and its lead over the runner-up.
fn best(scores: &[f64]) -> Verdict {
    let mut class = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[class] {
            class = i;
        }
    }
    let runner_up = scores
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != class)
        .map(|(_, &s)| s)
        .fold(f64::MIN, f64::max);
    Verdict {
        class,
        margin: scores[class] - runner_up,
    }
}

fn tree(nodes: &[TreeNode], i: usize, x: &[f64], margin: f64) -> Verdict {
    match nodes[i] {
        TreeNode::Leaf { class } => Verdict { class, margin },
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            let m = margin.min((x[feature] - threshold).abs());
            if x[feature] <= threshold {
                tree(nodes, left, x, m)
            } else {
                tree(nodes, right, x, m)
            }
        }
    }
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

pub fn evaluate(model: &ModelIR, x: &[f64], variant: SigmoidVariant) -> Verdict {
    match &model.payload {
        Payload::Tree(t) => tree(&t.nodes, 0, x, f64::INFINITY),
        Payload::Linear(l) => {
            let scores: Vec<f64> = l.weights.iter().zip(&l.bias).map(|(w, b)| dot(w, x) + b).collect();
            match l.score_rule {
                ScoreRule::ArgmaxLinear => best(&scores),
                ScoreRule::BinarySign => Verdict {
                    class: usize::from(scores[0] > 0.0),
                    margin: scores[0].abs(),
                },
            }
        }
        Payload::Mlp(m) => {
            let mut v = x.to_vec();
            for layer in &m.layers {
                v = layer
                    .weights
                    .iter()
                    .zip(&layer.bias)
                    .map(|(w, b)| {
                        let z = dot(w, &v) + b;
                        match layer.activation {
                            Activation::Identity => z,
                            Activation::Relu => z.max(0.0),
                            Activation::Sigmoid => sigmoid(z, variant),
                        }
                    })
                    .collect();
            }
            if v.len() == 1 {
                let last = m.layers.last().unwrap().activation;
                let thr = if last == Activation::Sigmoid { 0.5 } else { 0.0 };
                Verdict {
                    class: usize::from(v[0] > thr),
                    margin: (v[0] - thr).abs(),
                }
            } else {
                best(&v)
            }
        }
        Payload::KernelSvm(s) => {
            let mut votes = vec![0.0; model.class_labels.len()];
            let mut margin = f64::INFINITY;
            for m in &s.machines {
                let mut d = m.intercept;
                for (sv, c) in m.support_vectors.iter().zip(&m.dual_coefs) {
                    let k = match s.kernel {
                        Kernel::Rbf { gamma } => {
                            (-gamma * sv.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).exp()
                        }
                        Kernel::Poly { gamma, coef0, degree } => (gamma * dot(sv, x) + coef0).powi(degree as i32),
                    };
                    d += c * k;
                }
                margin = margin.min(d.abs());
                if d > 0.0 {
                    votes[m.class_a] += 1.0;
                } else {
                    votes[m.class_b] += 1.0;
                }
            }
            Verdict {
                class: best(&votes).class,
                margin,
            }
        }
    }
}
