//! Expression and declaration builders shared by the family emitters.

use std::fmt::Write;

use crate::fixedpoint::kernels;
use crate::inference::NumericMode;

/// C literal for an integer; the most negative 32-bit value is spelled as
/// an expression because `-2147483648` is a negated unsigned literal.
pub(crate) fn int_lit(v: i64) -> String {
    if v == i32::MIN as i64 {
        "(-2147483647 - 1)".to_string()
    } else {
        v.to_string()
    }
}

/// Shortest literal that reads back as exactly `x`.
pub(crate) fn float_lit(x: f32) -> String {
    format!("{x:?}f")
}

/// Spells the scalar operations of one numeric mode.
#[derive(Debug, Clone)]
pub(crate) struct Ops {
    pub prefix: String,
    pub mode: NumericMode,
}

impl Ops {
    pub fn elem(&self) -> String {
        match self.mode {
            NumericMode::Flt => "float".to_string(),
            NumericMode::Fxp(_) => format!("{}_fxp_t", self.prefix),
        }
    }

    /// Literal of a real constant converted like a model parameter.
    pub fn lit(&self, x: f64) -> String {
        match self.mode {
            NumericMode::Flt => float_lit(x as f32),
            NumericMode::Fxp(q) => int_lit(kernels::constant(x, q) as i64),
        }
    }

    pub fn zero(&self) -> String {
        match self.mode {
            NumericMode::Flt => "0.0f".to_string(),
            NumericMode::Fxp(_) => "0".to_string(),
        }
    }

    pub fn one(&self) -> String {
        match self.mode {
            NumericMode::Flt => "1.0f".to_string(),
            NumericMode::Fxp(q) => int_lit(q.one_raw() as i64),
        }
    }

    /// Integer count stored as a score value.
    pub fn count(&self, c: &str) -> String {
        format!("({}){c}", self.elem())
    }

    fn call(&self, op: &str, args: &[&str]) -> String {
        format!("{}_fxp_{op}({})", self.prefix, args.join(", "))
    }

    fn binary(&self, op: &str, sym: &str, a: &str, b: &str) -> String {
        match self.mode {
            NumericMode::Flt => format!("({a} {sym} {b})"),
            NumericMode::Fxp(_) => self.call(op, &[a, b]),
        }
    }

    pub fn add(&self, a: &str, b: &str) -> String {
        self.binary("add", "+", a, b)
    }

    pub fn sub(&self, a: &str, b: &str) -> String {
        self.binary("sub", "-", a, b)
    }

    pub fn mul(&self, a: &str, b: &str) -> String {
        self.binary("mul", "*", a, b)
    }

    pub fn div(&self, a: &str, b: &str) -> String {
        self.binary("div", "/", a, b)
    }

    pub fn neg(&self, a: &str) -> String {
        match self.mode {
            NumericMode::Flt => format!("-({a})"),
            NumericMode::Fxp(_) => self.call("neg", &[a]),
        }
    }

    pub fn exp(&self, a: &str) -> String {
        match self.mode {
            NumericMode::Flt => format!("{}_exp({a})", self.prefix),
            NumericMode::Fxp(_) => self.call("exp", &[a]),
        }
    }

    pub fn pow(&self, a: &str, k: u32) -> String {
        match self.mode {
            NumericMode::Flt => format!("{}_pow({a}, {k}u)", self.prefix),
            NumericMode::Fxp(_) => self.call("pow", &[a, &format!("{k}u")]),
        }
    }

    /// `static const` array of converted real parameters.
    pub fn param_array(&self, name: &str, values: &[f64]) -> String {
        let lits: Vec<String> = values.iter().map(|&v| self.lit(v)).collect();
        const_array(&self.elem(), &format!("{}_{name}", self.prefix), &lits)
    }
}

/// `static const` array declaration, eight initializers per line.
pub(crate) fn const_array(ty: &str, name: &str, lits: &[String]) -> String {
    let mut s = format!("static const {ty} {name}[{}] = {{", lits.len());
    for (i, chunk) in lits.chunks(8).enumerate() {
        s.push_str(if i == 0 { "\n    " } else { ",\n    " });
        s.push_str(&chunk.join(", "));
    }
    s.push_str("\n};\n");
    s
}

/// `static const` array of unsigned structural indices.
pub(crate) fn index_array(ty: &str, name: &str, values: &[usize]) -> String {
    let lits: Vec<String> = values.iter().map(|v| format!("{v}u")).collect();
    const_array(ty, name, &lits)
}

/// Appends `line` indented by `depth` levels.
pub(crate) fn line(out: &mut String, depth: usize, text: &str) {
    writeln!(out, "{:indent$}{text}", "", indent = depth * 4).expect("writing to a String cannot fail");
}
