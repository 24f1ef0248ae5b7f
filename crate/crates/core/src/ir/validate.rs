use std::collections::HashSet;
use std::fmt;

use super::{Kernel, ModelIR, Payload, ScoreRule};

/// One broken invariant: which type, which field, which rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub type_name: &'static str,
    pub field: String,
    pub rule: &'static str,
    pub detail: String,
}

impl Violation {
    pub(crate) fn new(
        type_name: &'static str,
        field: impl Into<String>,
        rule: &'static str,
        detail: impl Into<String>,
    ) -> Self {
        Violation {
            type_name,
            field: field.into(),
            rule,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}: {}", self.type_name, self.field, self.rule)?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn fail(&mut self, ty: &'static str, field: impl Into<String>, rule: &'static str, detail: String) {
        self.out.push(Violation::new(ty, field, rule, detail));
    }

    fn finite(&mut self, ty: &'static str, field: impl Fn() -> String, values: &[f64]) {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            self.fail(ty, format!("{}[{i}]", field()), "finite real", format!("{}", values[i]));
        }
    }

    fn matrix(&mut self, ty: &'static str, name: &str, m: &[Vec<f64>], cols: usize) {
        for (r, row) in m.iter().enumerate() {
            if row.len() != cols {
                self.fail(
                    ty,
                    format!("{name}[{r}]"),
                    "column count",
                    format!("expected {cols}, found {}", row.len()),
                );
            }
            self.finite(ty, || format!("{name}[{r}]"), row);
        }
    }

    fn class(&mut self, ty: &'static str, field: String, class: usize, k: usize) {
        if class >= k {
            self.fail(ty, field, "class index in range", format!("{class} >= {k}"));
        }
    }
}

/// Checks every IR invariant; an empty list means the model is valid.
pub fn validate(model: &ModelIR) -> Vec<Violation> {
    let mut c = Checker { out: Vec::new() };
    let d = model.n_features;
    let k = model.class_labels.len();

    if d == 0 {
        c.fail("ModelIR", "n_features", "n_features positive", String::new());
    }
    if k < 2 {
        c.fail("ModelIR", "class_labels", "at least two classes", format!("found {k}"));
    }
    let mut seen = HashSet::new();
    for (i, l) in model.class_labels.iter().enumerate() {
        if !seen.insert(l) {
            c.fail(
                "ModelIR",
                format!("class_labels[{i}]"),
                "class labels distinct",
                l.clone(),
            );
        }
    }

    match &model.payload {
        Payload::Tree(t) => {
            let n = t.nodes.len();
            if n == 0 {
                c.fail("TreeModel", "nodes", "at least one node", String::new());
            }
            let mut parents = vec![0usize; n];
            for (i, node) in t.nodes.iter().enumerate() {
                match *node {
                    super::TreeNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        if feature >= d {
                            c.fail(
                                "TreeNode",
                                format!("nodes[{i}].feature"),
                                "feature index in range",
                                format!("{feature} >= {d}"),
                            );
                        }
                        c.finite("TreeNode", || format!("nodes[{i}].threshold"), &[threshold]);
                        for (side, child) in [("left", left), ("right", right)] {
                            if child >= n {
                                c.fail(
                                    "TreeNode",
                                    format!("nodes[{i}].{side}"),
                                    "child index valid",
                                    format!("{child} >= {n}"),
                                );
                            } else if child <= i {
                                c.fail(
                                    "TreeNode",
                                    format!("nodes[{i}].{side}"),
                                    "topological order",
                                    format!("child {child} must be greater than {i}"),
                                );
                            } else {
                                parents[child] += 1;
                            }
                        }
                    }
                    super::TreeNode::Leaf { class } => c.class("TreeNode", format!("nodes[{i}].class"), class, k),
                }
            }
            for (i, &p) in parents.iter().enumerate().skip(1) {
                if p != 1 {
                    c.fail(
                        "TreeModel",
                        format!("nodes[{i}]"),
                        "single rooted tree",
                        format!("node has {p} parents"),
                    );
                }
            }
        }
        Payload::Linear(l) => {
            let rows = match l.score_rule {
                ScoreRule::ArgmaxLinear => k,
                ScoreRule::BinarySign => {
                    if k != 2 {
                        c.fail(
                            "LinearModel",
                            "score_rule",
                            "binary_sign needs two classes",
                            format!("K = {k}"),
                        );
                    }
                    1
                }
            };
            if l.weights.len() != rows {
                c.fail(
                    "LinearModel",
                    "weights",
                    "row count",
                    format!("expected {rows}, found {}", l.weights.len()),
                );
            }
            if l.bias.len() != l.weights.len() {
                c.fail(
                    "LinearModel",
                    "bias",
                    "bias length",
                    format!("expected {}, found {}", l.weights.len(), l.bias.len()),
                );
            }
            c.matrix("LinearModel", "weights", &l.weights, d);
            c.finite("LinearModel", || "bias".into(), &l.bias);
        }
        Payload::Mlp(m) => {
            if m.layers.is_empty() {
                c.fail("MLPModel", "layers", "at least one layer", String::new());
            }
            let mut expected_in = d;
            for (i, layer) in m.layers.iter().enumerate() {
                let name = format!("layers[{i}].weights");
                if layer.weights.is_empty() {
                    c.fail("MLPModel", name.clone(), "layer has outputs", String::new());
                }
                if layer.inputs() != expected_in && !layer.weights.is_empty() {
                    let rule = if i == 0 {
                        "first layer input size"
                    } else {
                        "layer dimension chain"
                    };
                    c.fail(
                        "MLPModel",
                        name.clone(),
                        rule,
                        format!(
                            "expects {} inputs, previous stage provides {expected_in}",
                            layer.inputs()
                        ),
                    );
                }
                c.matrix("MLPModel", &name, &layer.weights, layer.inputs());
                if layer.bias.len() != layer.outputs() {
                    c.fail(
                        "MLPModel",
                        format!("layers[{i}].bias"),
                        "bias length",
                        format!("expected {}, found {}", layer.outputs(), layer.bias.len()),
                    );
                }
                c.finite("MLPModel", || format!("layers[{i}].bias"), &layer.bias);
                expected_in = layer.outputs();
            }
            let out = m.output_size();
            if !m.layers.is_empty() && out != k && !(k == 2 && out == 1) {
                c.fail(
                    "MLPModel",
                    "layers",
                    "output size",
                    format!("last layer has {out} outputs for {k} classes"),
                );
            }
        }
        Payload::KernelSvm(s) => {
            match s.kernel {
                Kernel::Poly { gamma, coef0, degree } => {
                    c.finite("KernelSVMModel", || "kernel".into(), &[gamma, coef0]);
                    if degree == 0 {
                        c.fail("KernelSVMModel", "kernel.degree", "degree positive", String::new());
                    }
                }
                Kernel::Rbf { gamma } => c.finite("KernelSVMModel", || "kernel".into(), &[gamma]),
            }
            if s.machines.is_empty() {
                c.fail(
                    "KernelSVMModel",
                    "binary_machines",
                    "at least one machine",
                    String::new(),
                );
            }
            let mut pairs = HashSet::new();
            for (i, mach) in s.machines.iter().enumerate() {
                let f = |x: &str| format!("binary_machines[{i}].{x}");
                c.class("KernelSVMModel", f("class_a"), mach.class_a, k);
                c.class("KernelSVMModel", f("class_b"), mach.class_b, k);
                if mach.class_a >= mach.class_b {
                    c.fail(
                        "KernelSVMModel",
                        f("class_a"),
                        "class_a < class_b",
                        format!("{} >= {}", mach.class_a, mach.class_b),
                    );
                }
                if !pairs.insert((mach.class_a, mach.class_b)) {
                    c.fail(
                        "KernelSVMModel",
                        f("class_b"),
                        "pair appears at most once",
                        format!("({}, {})", mach.class_a, mach.class_b),
                    );
                }
                if mach.support_vectors.is_empty() {
                    c.fail(
                        "KernelSVMModel",
                        f("support_vectors"),
                        "at least one support vector",
                        String::new(),
                    );
                }
                if mach.dual_coefs.len() != mach.support_vectors.len() {
                    c.fail(
                        "KernelSVMModel",
                        f("dual_coefs"),
                        "dual coefficient count",
                        format!(
                            "expected {}, found {}",
                            mach.support_vectors.len(),
                            mach.dual_coefs.len()
                        ),
                    );
                }
                c.matrix("KernelSVMModel", &f("support_vectors"), &mach.support_vectors, d);
                c.finite("KernelSVMModel", || f("dual_coefs"), &mach.dual_coefs);
                c.finite("KernelSVMModel", || f("intercept"), &[mach.intercept]);
            }
        }
    }
    c.out
}
