use crate::inference::{TreeStyle, TreeTable};
use crate::ir::TreeModel;

use super::emit::{index_array, line, Ops};
use super::layout::tree_index_type;
use super::Shape;

pub(crate) fn gen_tree(tree: &TreeModel, shape: Shape, style: TreeStyle, ops: &Ops, hook: bool) -> String {
    let p = &ops.prefix;
    let t = ops.elem();
    let table = TreeTable::from_tree(tree);
    let n = table.n_internal;
    let mut s = String::new();

    if n == 0 {
        line(&mut s, 0, &format!("int32_t {p}_classify(const {t}* x) {{"));
        line(&mut s, 1, "(void)x;");
        line(&mut s, 1, &format!("return {};", table.root - n));
        line(&mut s, 0, "}");
    } else {
        s.push_str(&ops.param_array("thresholds", &table.thresholds));
        match style {
            TreeStyle::Iterative => {
                let (ix, _) = tree_index_type(&table, shape.n_features);
                s.push_str(&index_array(ix, &format!("{p}_features"), &table.features));
                s.push_str(&index_array(ix, &format!("{p}_left"), &table.left));
                s.push_str(&index_array(ix, &format!("{p}_right"), &table.right));
                s.push('\n');
                line(&mut s, 0, &format!("int32_t {p}_classify(const {t}* x) {{"));
                line(&mut s, 1, &format!("uint32_t idx = {}u;", table.root));
                line(&mut s, 1, &format!("while (idx < {n}u) {{"));
                line(
                    &mut s,
                    2,
                    &format!("idx = x[{p}_features[idx]] <= {p}_thresholds[idx] ? {p}_left[idx] : {p}_right[idx];"),
                );
                line(&mut s, 1, "}");
                line(&mut s, 1, &format!("return (int32_t)(idx - {n}u);"));
                line(&mut s, 0, "}");
            }
            TreeStyle::IfElse => {
                s.push('\n');
                line(&mut s, 0, &format!("int32_t {p}_classify(const {t}* x) {{"));
                nested(&mut s, &table, table.root, 1, p);
                line(&mut s, 0, "}");
            }
        }
    }

    if hook {
        s.push('\n');
        line(&mut s, 0, &format!("void {p}_scores(const {t}* x, {t}* out) {{"));
        line(&mut s, 1, &format!("int32_t c = {p}_classify(x);"));
        line(&mut s, 1, "int32_t i;");
        line(
            &mut s,
            1,
            &format!("for (i = 0; i < {}; ++i) out[i] = {};", shape.n_classes, ops.zero()),
        );
        line(&mut s, 1, &format!("out[c] = {};", ops.count("1")));
        line(&mut s, 0, "}");
    }
    s
}

fn nested(s: &mut String, table: &TreeTable, code: usize, depth: usize, p: &str) {
    if code >= table.n_internal {
        line(s, depth, &format!("return {};", code - table.n_internal));
        return;
    }
    line(
        s,
        depth,
        &format!("if (x[{}] <= {p}_thresholds[{code}]) {{", table.features[code]),
    );
    nested(s, table, table.left[code], depth + 1, p);
    line(s, depth, "} else {");
    nested(s, table, table.right[code], depth + 1, p);
    line(s, depth, "}");
}
