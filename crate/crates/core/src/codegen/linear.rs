use crate::ir::{LinearModel, ScoreRule};

use super::emit::{line, Ops};
use super::Shape;

pub(crate) fn gen_linear(model: &LinearModel, shape: Shape, ops: &Ops, hook: bool) -> String {
    let p = &ops.prefix;
    let t = ops.elem();
    let d = shape.n_features;
    let rows = model.weights.len();
    let weights: Vec<f64> = model.weights.iter().flatten().copied().collect();
    let mut s = String::new();
    s.push_str(&ops.param_array("weights", &weights));
    s.push_str(&ops.param_array("bias", &model.bias));
    s.push('\n');

    let product = ops.mul(&format!("{p}_weights[i * {d} + j]"), "x[j]");
    line(
        &mut s,
        0,
        &format!("static void {p}_linear_scores(const {t}* x, {t}* s) {{"),
    );
    line(&mut s, 1, "int32_t i;");
    line(&mut s, 1, "int32_t j;");
    line(&mut s, 1, &format!("for (i = 0; i < {rows}; ++i) {{"));
    line(&mut s, 2, &format!("{t} acc = {p}_bias[i];"));
    line(
        &mut s,
        2,
        &format!("for (j = 0; j < {d}; ++j) acc = {};", ops.add("acc", &product)),
    );
    line(&mut s, 2, "s[i] = acc;");
    line(&mut s, 1, "}");
    line(&mut s, 0, "}");
    s.push('\n');

    match model.score_rule {
        ScoreRule::ArgmaxLinear => {
            line(&mut s, 0, &format!("int32_t {p}_classify(const {t}* x) {{"));
            line(&mut s, 1, &format!("{t} s[{rows}];"));
            line(&mut s, 1, "int32_t i;");
            line(&mut s, 1, "int32_t best = 0;");
            line(&mut s, 1, &format!("{p}_linear_scores(x, s);"));
            line(&mut s, 1, &format!("for (i = 1; i < {rows}; ++i) {{"));
            line(&mut s, 2, "if (s[i] > s[best]) best = i;");
            line(&mut s, 1, "}");
            line(&mut s, 1, "return best;");
            line(&mut s, 0, "}");
            if hook {
                s.push('\n');
                line(&mut s, 0, &format!("void {p}_scores(const {t}* x, {t}* out) {{"));
                line(&mut s, 1, &format!("{p}_linear_scores(x, out);"));
                line(&mut s, 0, "}");
            }
        }
        ScoreRule::BinarySign => {
            line(&mut s, 0, &format!("int32_t {p}_classify(const {t}* x) {{"));
            line(&mut s, 1, &format!("{t} s;"));
            line(&mut s, 1, &format!("{p}_linear_scores(x, &s);"));
            line(&mut s, 1, &format!("return s > {} ? 1 : 0;", ops.zero()));
            line(&mut s, 0, "}");
            if hook {
                s.push('\n');
                line(&mut s, 0, &format!("void {p}_scores(const {t}* x, {t}* out) {{"));
                line(&mut s, 1, &format!("out[0] = {};", ops.zero()));
                line(&mut s, 1, &format!("{p}_linear_scores(x, out + 1);"));
                line(&mut s, 0, "}");
            }
        }
    }
    s
}
