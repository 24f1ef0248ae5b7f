//! Small, seeded trainers used to obtain realistic models for accuracy
//! checks. Inputs are divided by `INPUT_SCALE` during training and the
//! scale is folded back into the first layer of weights, so every exported
//! model consumes raw feature vectors.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tinyclf_core::ir::{Activation, DenseLayer, LinearModel, MlpModel, Payload, ScoreRule, TreeModel, TreeNode};
use tinyclf_core::{Dataset, ModelIR};

/// PenDigits features lie in [0, 100].
pub const INPUT_SCALE: f64 = 100.0;

fn wrap(ds: &Dataset, payload: Payload, notes: &str) -> ModelIR {
    let mut metadata = BTreeMap::new();
    metadata.insert("training".to_string(), notes.to_string());
    ModelIR {
        n_features: ds.n_features(),
        class_labels: ds.class_labels.clone(),
        metadata,
        payload,
    }
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

struct Cart<'a> {
    ds: &'a Dataset,
    k: usize,
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<TreeNode>,
}

impl Cart<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.k];
        for &r in rows {
            c[self.ds.labels[r]] += 1;
        }
        c
    }

    /// Best Gini split as (feature, threshold), thresholds at midpoints.
    fn best_split(&self, rows: &[usize]) -> Option<(usize, f64)> {
        let total = self.counts(rows);
        let n = rows.len();
        let parent = gini(&total, n);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = rows.to_vec();
        for f in 0..self.ds.n_features() {
            let x = |r: usize| self.ds.features[r][f];
            sorted.sort_by(|&a, &b| x(a).total_cmp(&x(b)));
            let mut left = vec![0; self.k];
            for i in 0..n - 1 {
                left[self.ds.labels[sorted[i]]] += 1;
                let (a, b) = (x(sorted[i]), x(sorted[i + 1]));
                let n_left = i + 1;
                if a == b || n_left < self.min_leaf || n - n_left < self.min_leaf {
                    continue;
                }
                let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                let impurity =
                    (n_left as f64 * gini(&left, n_left) + (n - n_left) as f64 * gini(&right, n - n_left)) / n as f64;
                let gain = parent - impurity;
                if gain > 1e-12 && !best.is_some_and(|(g, _, _)| gain <= g) {
                    best = Some((gain, f, (a + b) / 2.0));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let id = self.nodes.len();
        let counts = self.counts(rows);
        self.nodes.push(TreeNode::Leaf {
            class: majority(&counts),
        });
        if depth >= self.max_depth || counts.iter().filter(|&&c| c > 0).count() < 2 {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(rows) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.ds.features[i][feature] <= threshold);
        let left = self.grow(&l, depth + 1);
        let right = self.grow(&r, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

/// CART with Gini impurity.
pub fn train_tree(ds: &Dataset, max_depth: usize, min_leaf: usize) -> ModelIR {
    let mut cart = Cart {
        ds,
        k: ds.class_labels.len(),
        max_depth,
        min_leaf,
        nodes: Vec::new(),
    };
    let rows: Vec<usize> = (0..ds.len()).collect();
    cart.grow(&rows, 0);
    let notes = format!("CART gini, max_depth {max_depth}, min_leaf {min_leaf}");
    wrap(ds, Payload::Tree(TreeModel { nodes: cart.nodes }), &notes)
}

fn softmax_grad(z: &mut [f64], label: usize) {
    let m = z.iter().cloned().fold(f64::MIN, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        sum += *v;
    }
    for (i, v) in z.iter_mut().enumerate() {
        *v = *v / sum - if i == label { 1.0 } else { 0.0 };
    }
}

fn scaled(ds: &Dataset) -> Vec<Vec<f64>> {
    ds.features
        .iter()
        .map(|r| r.iter().map(|v| v / INPUT_SCALE).collect())
        .collect()
}

/// Multinomial logistic regression by mini-batch SGD on scaled inputs.
pub fn train_logistic(ds: &Dataset, epochs: usize, lr: f64, seed: u64) -> ModelIR {
    let (k, d) = (ds.class_labels.len(), ds.n_features());
    let xs = scaled(ds);
    let mut w = vec![vec![0.0; d]; k];
    let mut b = vec![0.0; k];
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let x = &xs[i];
            let mut z: Vec<f64> = (0..k)
                .map(|c| b[c] + w[c].iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
                .collect();
            softmax_grad(&mut z, ds.labels[i]);
            for c in 0..k {
                for j in 0..d {
                    w[c][j] -= lr * z[c] * x[j];
                }
                b[c] -= lr * z[c];
            }
        }
    }
    let weights = w
        .into_iter()
        .map(|row| row.into_iter().map(|v| v / INPUT_SCALE).collect())
        .collect();
    let notes = format!("softmax regression, SGD {epochs} epochs, lr {lr}, inputs /{INPUT_SCALE} folded");
    wrap(
        ds,
        Payload::Linear(LinearModel {
            weights,
            bias: b,
            score_rule: ScoreRule::ArgmaxLinear,
        }),
        &notes,
    )
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One sigmoid hidden layer and a linear output trained with softmax
/// cross-entropy by per-example SGD.
pub fn train_mlp(ds: &Dataset, hidden: usize, epochs: usize, lr: f64, seed: u64) -> ModelIR {
    let (k, d) = (ds.class_labels.len(), ds.n_features());
    let xs = scaled(ds);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut init = |n_out: usize, n_in: usize| -> Vec<Vec<f64>> {
        let s = (6.0 / (n_in + n_out) as f64).sqrt();
        (0..n_out)
            .map(|_| (0..n_in).map(|_| rng.gen_range(-s..s)).collect())
            .collect()
    };
    let mut w1 = init(hidden, d);
    let mut w2 = init(k, hidden);
    let mut b1 = vec![0.0; hidden];
    let mut b2 = vec![0.0; k];
    let mut order: Vec<usize> = (0..ds.len()).collect();
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let x = &xs[i];
            let h: Vec<f64> = (0..hidden)
                .map(|j| sig(b1[j] + w1[j].iter().zip(x).map(|(a, v)| a * v).sum::<f64>()))
                .collect();
            let mut g: Vec<f64> = (0..k)
                .map(|c| b2[c] + w2[c].iter().zip(&h).map(|(a, v)| a * v).sum::<f64>())
                .collect();
            softmax_grad(&mut g, ds.labels[i]);
            let gh: Vec<f64> = (0..hidden)
                .map(|j| (0..k).map(|c| g[c] * w2[c][j]).sum::<f64>() * h[j] * (1.0 - h[j]))
                .collect();
            for c in 0..k {
                for j in 0..hidden {
                    w2[c][j] -= lr * g[c] * h[j];
                }
                b2[c] -= lr * g[c];
            }
            for j in 0..hidden {
                for f in 0..d {
                    w1[j][f] -= lr * gh[j] * x[f];
                }
                b1[j] -= lr * gh[j];
            }
        }
    }
    let w1 = w1
        .into_iter()
        .map(|row| row.into_iter().map(|v| v / INPUT_SCALE).collect())
        .collect();
    let layers = vec![
        DenseLayer {
            weights: w1,
            bias: b1,
            activation: Activation::Sigmoid,
        },
        DenseLayer {
            weights: w2,
            bias: b2,
            activation: Activation::Identity,
        },
    ];
    let notes = format!("{d}-{hidden}-{k} sigmoid MLP, SGD {epochs} epochs, lr {lr}, inputs /{INPUT_SCALE} folded");
    wrap(ds, Payload::Mlp(MlpModel { layers }), &notes)
}
