use crate::inference::{SigmoidVariant, PWL4_MID_SLOPE, PWL4_OUTER_SLOPE};
use crate::ir::{Activation, MlpModel};

use super::emit::{line, Ops};
use super::Shape;

/// Body of `<p>_sigmoid` for one variant.
pub(crate) fn gen_sigmoid(variant: SigmoidVariant, ops: &Ops) -> String {
    let p = &ops.prefix;
    let t = ops.elem();
    let one = ops.one();
    let half = ops.lit(0.5);
    let mut s = String::new();
    line(&mut s, 0, &format!("static inline {t} {p}_sigmoid({t} x) {{"));
    match variant {
        SigmoidVariant::Exact => {
            let e = ops.exp(&ops.neg("x"));
            line(&mut s, 1, &format!("return {};", ops.div(&one, &ops.add(&one, &e))));
        }
        SigmoidVariant::Rational => {
            line(
                &mut s,
                1,
                &format!("{t} ax = ({} <= x) ? x : {};", ops.zero(), ops.neg("x")),
            );
            line(&mut s, 1, &format!("{t} d = {};", ops.add(&one, "ax")));
            line(&mut s, 1, &format!("{t} q = {};", ops.div("x", "d")));
            line(&mut s, 1, &format!("{t} m = {};", ops.mul(&half, "q")));
            line(&mut s, 1, &format!("return {};", ops.add(&half, "m")));
        }
        SigmoidVariant::Pwl2 => {
            line(
                &mut s,
                1,
                &format!("if (x <= {}) return {};", ops.lit(-2.0), ops.zero()),
            );
            line(&mut s, 1, &format!("if (x >= {}) return {one};", ops.lit(2.0)));
            let quarter = ops.lit(0.25);
            line(
                &mut s,
                1,
                &format!("return {};", ops.add(&ops.mul("x", &quarter), &half)),
            );
        }
        SigmoidVariant::Pwl4 => {
            let four = ops.lit(4.0);
            let mid = ops.lit(PWL4_MID_SLOPE);
            let outer = ops.lit(PWL4_OUTER_SLOPE);
            line(
                &mut s,
                1,
                &format!("{t} ax = ({} <= x) ? x : {};", ops.zero(), ops.neg("x")),
            );
            line(&mut s, 1, &format!("{t} y;"));
            line(&mut s, 1, &format!("if (ax > {four}) ax = {four};"));
            line(&mut s, 1, &format!("if (ax <= {one}) {{"));
            line(&mut s, 2, &format!("y = {};", ops.add(&half, &ops.mul(&mid, "ax"))));
            line(&mut s, 1, "} else {");
            let knot = ops.add(&half, &mid);
            line(
                &mut s,
                2,
                &format!("y = {};", ops.add(&knot, &ops.mul(&outer, &ops.sub("ax", &one)))),
            );
            line(&mut s, 1, "}");
            line(
                &mut s,
                1,
                &format!("return ({} <= x) ? y : {};", ops.zero(), ops.sub(&one, "y")),
            );
        }
    }
    line(&mut s, 0, "}");
    s
}

pub(crate) fn gen_mlp(model: &MlpModel, shape: Shape, variant: SigmoidVariant, ops: &Ops, hook: bool) -> String {
    let p = &ops.prefix;
    let t = ops.elem();
    let width = model.max_layer_width();
    let mut s = String::new();
    for (li, layer) in model.layers.iter().enumerate() {
        let w: Vec<f64> = layer.weights.iter().flatten().copied().collect();
        s.push_str(&ops.param_array(&format!("w{li}"), &w));
        s.push_str(&ops.param_array(&format!("b{li}"), &layer.bias));
    }
    s.push('\n');
    if model.layers.iter().any(|l| l.activation == Activation::Sigmoid) {
        s.push_str(&gen_sigmoid(variant, ops));
        s.push('\n');
    }

    line(
        &mut s,
        0,
        &format!("static const {t}* {p}_forward(const {t}* x, {t}* buf0, {t}* buf1) {{"),
    );
    line(&mut s, 1, "int32_t i;");
    line(&mut s, 1, "int32_t j;");
    if model.layers.len() == 1 {
        line(&mut s, 1, "(void)buf1;");
    }
    let zero = ops.zero();
    for (li, layer) in model.layers.iter().enumerate() {
        let (n_out, n_in) = (layer.outputs(), layer.inputs());
        let src = if li == 0 {
            "x".to_string()
        } else {
            format!("buf{}", (li - 1) % 2)
        };
        let dst = format!("buf{}", li % 2);
        let act = match layer.activation {
            Activation::Identity => "acc".to_string(),
            Activation::Relu => format!("acc > {zero} ? acc : {zero}"),
            Activation::Sigmoid => format!("{p}_sigmoid(acc)"),
        };
        let product = ops.mul(&format!("{p}_w{li}[i * {n_in} + j]"), &format!("{src}[j]"));
        line(&mut s, 1, &format!("for (i = 0; i < {n_out}; ++i) {{"));
        line(&mut s, 2, &format!("{t} acc = {p}_b{li}[i];"));
        line(
            &mut s,
            2,
            &format!("for (j = 0; j < {n_in}; ++j) acc = {};", ops.add("acc", &product)),
        );
        line(&mut s, 2, &format!("{dst}[i] = {act};"));
        line(&mut s, 1, "}");
    }
    line(&mut s, 1, &format!("return buf{};", (model.layers.len() - 1) % 2));
    line(&mut s, 0, "}");
    s.push('\n');

    let out = model.output_size();
    let binary = out == 1;
    let threshold = match model.layers.last().map(|l| l.activation) {
        Some(Activation::Sigmoid) => ops.lit(0.5),
        _ => zero.clone(),
    };
    let buffers = |s: &mut String| {
        line(s, 1, &format!("{t} buf0[{width}];"));
        line(s, 1, &format!("{t} buf1[{width}];"));
        line(s, 1, &format!("const {t}* o = {p}_forward(x, buf0, buf1);"));
    };
    line(&mut s, 0, &format!("int32_t {p}_classify(const {t}* x) {{"));
    buffers(&mut s);
    if binary {
        line(&mut s, 1, &format!("return o[0] > {threshold} ? 1 : 0;"));
    } else {
        line(&mut s, 1, "int32_t i;");
        line(&mut s, 1, "int32_t best = 0;");
        line(&mut s, 1, &format!("for (i = 1; i < {out}; ++i) {{"));
        line(&mut s, 2, "if (o[i] > o[best]) best = i;");
        line(&mut s, 1, "}");
        line(&mut s, 1, "return best;");
    }
    line(&mut s, 0, "}");

    if hook {
        s.push('\n');
        line(&mut s, 0, &format!("void {p}_scores(const {t}* x, {t}* out) {{"));
        buffers(&mut s);
        if binary {
            line(&mut s, 1, &format!("out[0] = {threshold};"));
            line(&mut s, 1, "out[1] = o[0];");
        } else {
            line(&mut s, 1, "int32_t i;");
            line(
                &mut s,
                1,
                &format!("for (i = 0; i < {}; ++i) out[i] = o[i];", shape.n_classes),
            );
        }
        line(&mut s, 0, "}");
    }
    s
}
