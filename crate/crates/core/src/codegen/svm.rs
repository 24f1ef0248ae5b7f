use crate::ir::{Kernel, KernelSvmModel};

use super::emit::{index_array, line, Ops};
use super::layout::index_type;
use super::Shape;

pub(crate) fn gen_svm(model: &KernelSvmModel, shape: Shape, ops: &Ops, hook: bool) -> String {
    let p = &ops.prefix;
    let t = ops.elem();
    let d = shape.n_features;
    let k = shape.n_classes;
    let machines = &model.machines;
    let n_machines = machines.len();
    let total = model.support_vector_total();

    let sv: Vec<f64> = machines
        .iter()
        .flat_map(|m| m.support_vectors.iter().flatten())
        .copied()
        .collect();
    let dual: Vec<f64> = machines.iter().flat_map(|m| &m.dual_coefs).copied().collect();
    let intercept: Vec<f64> = machines.iter().map(|m| m.intercept).collect();
    let class_a: Vec<usize> = machines.iter().map(|m| m.class_a).collect();
    let class_b: Vec<usize> = machines.iter().map(|m| m.class_b).collect();
    let mut start = vec![0usize];
    for m in machines {
        start.push(start.last().copied().unwrap_or(0) + m.support_vectors.len());
    }
    let (class_ty, _) = index_type(k - 1);
    let (start_ty, _) = index_type(total);

    let mut s = String::new();
    s.push_str(&ops.param_array("sv", &sv));
    s.push_str(&ops.param_array("dual", &dual));
    s.push_str(&ops.param_array("intercept", &intercept));
    s.push_str(&index_array(class_ty, &format!("{p}_class_a"), &class_a));
    s.push_str(&index_array(class_ty, &format!("{p}_class_b"), &class_b));
    s.push_str(&index_array(start_ty, &format!("{p}_sv_start"), &start));
    s.push('\n');

    line(
        &mut s,
        0,
        &format!("static inline {t} {p}_kernel(const {t}* sv, const {t}* x) {{"),
    );
    line(&mut s, 1, "int32_t j;");
    match model.kernel {
        Kernel::Poly { gamma, coef0, degree } => {
            line(&mut s, 1, &format!("{t} dot = {};", ops.zero()));
            let product = ops.mul("sv[j]", "x[j]");
            line(
                &mut s,
                1,
                &format!("for (j = 0; j < {d}; ++j) dot = {};", ops.add("dot", &product)),
            );
            let g = ops.mul(&ops.lit(gamma), "dot");
            let base = ops.add(&g, &ops.lit(coef0));
            line(&mut s, 1, &format!("return {};", ops.pow(&base, degree)));
        }
        Kernel::Rbf { gamma } => {
            line(&mut s, 1, &format!("{t} d2 = {};", ops.zero()));
            line(&mut s, 1, &format!("for (j = 0; j < {d}; ++j) {{"));
            line(&mut s, 2, &format!("{t} diff = {};", ops.sub("sv[j]", "x[j]")));
            line(&mut s, 2, &format!("d2 = {};", ops.add("d2", &ops.mul("diff", "diff"))));
            line(&mut s, 1, "}");
            let g = ops.mul(&ops.lit(gamma), "d2");
            line(&mut s, 1, &format!("return {};", ops.exp(&ops.neg(&g))));
        }
    }
    line(&mut s, 0, "}");
    s.push('\n');

    let term = ops.mul(&format!("{p}_dual[v]"), &format!("{p}_kernel({p}_sv + v * {d}, x)"));
    line(
        &mut s,
        0,
        &format!("static void {p}_votes(const {t}* x, int32_t* votes) {{"),
    );
    line(&mut s, 1, "int32_t m;");
    line(&mut s, 1, "int32_t v;");
    line(&mut s, 1, &format!("for (m = 0; m < {k}; ++m) votes[m] = 0;"));
    line(&mut s, 1, &format!("for (m = 0; m < {n_machines}; ++m) {{"));
    line(&mut s, 2, &format!("{t} s = {};", ops.zero()));
    line(
        &mut s,
        2,
        &format!("for (v = (int32_t){p}_sv_start[m]; v < (int32_t){p}_sv_start[m + 1]; ++v) {{"),
    );
    line(&mut s, 3, &format!("s = {};", ops.add("s", &term)));
    line(&mut s, 2, "}");
    line(
        &mut s,
        2,
        &format!("s = {};", ops.add("s", &format!("{p}_intercept[m]"))),
    );
    line(&mut s, 2, &format!("if (s > {}) {{", ops.zero()));
    line(&mut s, 3, &format!("votes[{p}_class_a[m]] += 1;"));
    line(&mut s, 2, "} else {");
    line(&mut s, 3, &format!("votes[{p}_class_b[m]] += 1;"));
    line(&mut s, 2, "}");
    line(&mut s, 1, "}");
    line(&mut s, 0, "}");
    s.push('\n');

    line(&mut s, 0, &format!("int32_t {p}_classify(const {t}* x) {{"));
    line(&mut s, 1, &format!("int32_t votes[{k}];"));
    line(&mut s, 1, "int32_t i;");
    line(&mut s, 1, "int32_t best = 0;");
    line(&mut s, 1, &format!("{p}_votes(x, votes);"));
    line(&mut s, 1, &format!("for (i = 1; i < {k}; ++i) {{"));
    line(&mut s, 2, "if (votes[i] > votes[best]) best = i;");
    line(&mut s, 1, "}");
    line(&mut s, 1, "return best;");
    line(&mut s, 0, "}");

    if hook {
        s.push('\n');
        line(&mut s, 0, &format!("void {p}_scores(const {t}* x, {t}* out) {{"));
        line(&mut s, 1, &format!("int32_t votes[{k}];"));
        line(&mut s, 1, "int32_t i;");
        line(&mut s, 1, &format!("{p}_votes(x, votes);"));
        line(
            &mut s,
            1,
            &format!("for (i = 0; i < {k}; ++i) out[i] = {};", ops.count("votes[i]")),
        );
        line(&mut s, 0, "}");
    }
    s
}
