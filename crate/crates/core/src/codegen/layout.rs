//! What the generated file stores and how big it is.

use crate::inference::TreeTable;
use crate::ir::{ModelIR, Payload};

/// Every stored real of the model, in the order the emitters write them.
pub fn parameters(model: &ModelIR) -> Vec<f64> {
    match &model.payload {
        Payload::Tree(t) => TreeTable::from_tree(t).thresholds,
        Payload::Linear(l) => l.weights.iter().flatten().chain(&l.bias).copied().collect(),
        Payload::Mlp(m) => m
            .layers
            .iter()
            .flat_map(|l| l.weights.iter().flatten().chain(&l.bias))
            .copied()
            .collect(),
        Payload::KernelSvm(s) => {
            let machines = &s.machines;
            machines
                .iter()
                .flat_map(|m| m.support_vectors.iter().flatten())
                .chain(machines.iter().flat_map(|m| &m.dual_coefs))
                .chain(machines.iter().map(|m| &m.intercept))
                .copied()
                .collect()
        }
    }
}

/// Narrowest unsigned C type able to hold `max`.
pub(crate) fn index_type(max: usize) -> (&'static str, usize) {
    if max <= u8::MAX as usize {
        ("uint8_t", 1)
    } else if max <= u16::MAX as usize {
        ("uint16_t", 2)
    } else {
        ("uint32_t", 4)
    }
}

/// Index width shared by the three structural columns of an iterative tree.
pub(crate) fn tree_index_type(table: &TreeTable, n_features: usize) -> (&'static str, usize) {
    index_type(table.max_code().max(n_features.saturating_sub(1)))
}

/// Byte size of `static const` arrays emitted in a source file.
///
/// Understands the fixed-width integer types, `float`, and any `typedef`
/// of those appearing earlier in the file.
pub fn measure_const_bytes(source: &str) -> usize {
    let mut sizes: Vec<(String, usize)> = [
        ("float", 4),
        ("int8_t", 1),
        ("uint8_t", 1),
        ("int16_t", 2),
        ("uint16_t", 2),
        ("int32_t", 4),
        ("uint32_t", 4),
        ("int64_t", 8),
        ("uint64_t", 8),
    ]
    .into_iter()
    .map(|(t, s)| (t.to_string(), s))
    .collect();
    let lookup = |sizes: &[(String, usize)], t: &str| sizes.iter().find(|(n, _)| n == t).map(|&(_, s)| s);

    let mut total = 0;
    for line in source.lines().map(str::trim) {
        if let Some(rest) = line.strip_prefix("typedef ") {
            let mut parts = rest.trim_end_matches(';').split_whitespace();
            if let (Some(base), Some(alias)) = (parts.next(), parts.next()) {
                if let Some(s) = lookup(&sizes, base) {
                    sizes.push((alias.to_string(), s));
                }
            }
            continue;
        }
        let Some(rest) = line.strip_prefix("static const ") else {
            continue;
        };
        let Some((decl, _)) = rest.split_once('=') else {
            continue;
        };
        let mut parts = decl.split_whitespace();
        let (Some(ty), Some(name)) = (parts.next(), parts.next()) else {
            continue;
        };
        let Some(len) = name
            .split_once('[')
            .and_then(|(_, n)| n.strip_suffix(']'))
            .and_then(|n| n.parse::<usize>().ok())
        else {
            continue;
        };
        if let Some(s) = lookup(&sizes, ty) {
            total += s * len;
        }
    }
    total
}
