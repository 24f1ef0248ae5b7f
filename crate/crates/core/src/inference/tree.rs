use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ir::{TreeModel, TreeNode};

use super::arith::Arith;

/// Trees deeper than this are always executed (and emitted) iteratively.
pub const IF_ELSE_MAX_DEPTH: usize = 512;

/// How a decision tree is traversed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeStyle {
    /// Node tables plus a loop.
    #[default]
    Iterative,
    /// One nested conditional per split.
    IfElse,
}

impl TreeStyle {
    pub fn as_str(self) -> &'static str {
        match self {
            TreeStyle::Iterative => "iterative",
            TreeStyle::IfElse => "if_else",
        }
    }
}

impl fmt::Display for TreeStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TreeStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "iterative" => Ok(TreeStyle::Iterative),
            "if_else" | "ifelse" => Ok(TreeStyle::IfElse),
            _ => Err(format!("unknown tree style {s:?} (iterative, if-else)")),
        }
    }
}

/// Compact split table used by iterative traversal.
///
/// Only split nodes get a row. A child code below `n_internal` is the row of
/// another split; a code `n_internal + c` is a leaf of class `c`. Rows keep
/// the topological order of the source tree, so children always have larger
/// codes than their parents.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeTable {
    pub n_internal: usize,
    pub root: usize,
    pub features: Vec<usize>,
    pub thresholds: Vec<f64>,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

impl TreeTable {
    pub fn from_tree(tree: &TreeModel) -> TreeTable {
        let mut row = vec![usize::MAX; tree.nodes.len()];
        let mut n_internal = 0;
        for (i, n) in tree.nodes.iter().enumerate() {
            if matches!(n, TreeNode::Split { .. }) {
                row[i] = n_internal;
                n_internal += 1;
            }
        }
        let code = |i: usize| match tree.nodes[i] {
            TreeNode::Split { .. } => row[i],
            TreeNode::Leaf { class } => n_internal + class,
        };
        let mut t = TreeTable {
            n_internal,
            root: code(0),
            features: Vec::with_capacity(n_internal),
            thresholds: Vec::with_capacity(n_internal),
            left: Vec::with_capacity(n_internal),
            right: Vec::with_capacity(n_internal),
        };
        for n in &tree.nodes {
            if let TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } = *n
            {
                t.features.push(feature);
                t.thresholds.push(threshold);
                t.left.push(code(left));
                t.right.push(code(right));
            }
        }
        t
    }

    /// Largest code stored in the child columns (or the root code).
    pub fn max_code(&self) -> usize {
        self.left.iter().chain(&self.right).copied().fold(self.root, usize::max)
    }

    /// Follows the table from the root; `go_left(feature, row)` decides each
    /// split. Returns the leaf class.
    pub fn walk(&self, mut go_left: impl FnMut(usize, usize) -> bool) -> usize {
        let mut idx = self.root;
        while idx < self.n_internal {
            idx = if go_left(self.features[idx], idx) {
                self.left[idx]
            } else {
                self.right[idx]
            };
        }
        idx - self.n_internal
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum PreparedNode<V> {
    Split {
        feature: usize,
        threshold: V,
        left: usize,
        right: usize,
    },
    Leaf(usize),
}

pub(crate) fn prepare_nodes<A: Arith>(tree: &TreeModel, a: &A) -> Vec<PreparedNode<A::V>> {
    tree.nodes
        .iter()
        .map(|n| match *n {
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => PreparedNode::Split {
                feature,
                threshold: a.constant(threshold),
                left,
                right,
            },
            TreeNode::Leaf { class } => PreparedNode::Leaf(class),
        })
        .collect()
}

/// Recursive descent mirroring the nested conditionals of the if/else style.
pub(crate) fn walk_nested<V: Copy>(nodes: &[PreparedNode<V>], i: usize, le: &impl Fn(usize, V) -> bool) -> usize {
    match nodes[i] {
        PreparedNode::Leaf(c) => c,
        PreparedNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            if le(feature, threshold) {
                walk_nested(nodes, left, le)
            } else {
                walk_nested(nodes, right, le)
            }
        }
    }
}
