//! Logistic sigmoid and its cheap stand-ins.
//!
//! | variant    | definition                                              |
//! |------------|---------------------------------------------------------|
//! | `exact`    | `1 / (1 + e^-x)`                                        |
//! | `rational` | `0.5 + 0.5·x / (1 + |x|)`                               |
//! | `pwl2`     | `clamp(0.25·x + 0.5, 0, 1)`, saturating at `|x| = 2`    |
//! | `pwl4`     | linear between knots at ±1 and ±4 placed on the exact   |
//! |            | curve, constant outside ±4                              |
//!
//! pwl4 is evaluated on `|x|` and mirrored as `1 - y` for negative inputs;
//! the outer segment starts from the inner segment's value at the knot so
//! the curve stays continuous and monotone after quantization.
//!
//! The pwl4 knot heights are the exact sigmoid values at ±1 and ±4.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::arith::Arith;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmoidVariant {
    #[default]
    Exact,
    Rational,
    Pwl2,
    Pwl4,
}

impl SigmoidVariant {
    pub const ALL: [SigmoidVariant; 4] = [
        SigmoidVariant::Exact,
        SigmoidVariant::Rational,
        SigmoidVariant::Pwl2,
        SigmoidVariant::Pwl4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SigmoidVariant::Exact => "exact",
            SigmoidVariant::Rational => "rational",
            SigmoidVariant::Pwl2 => "pwl2",
            SigmoidVariant::Pwl4 => "pwl4",
        }
    }
}

impl fmt::Display for SigmoidVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SigmoidVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(SigmoidVariant::Exact),
            "rational" => Ok(SigmoidVariant::Rational),
            "pwl2" => Ok(SigmoidVariant::Pwl2),
            "pwl4" => Ok(SigmoidVariant::Pwl4),
            _ => Err(format!("unknown sigmoid variant {s:?} (exact, rational, pwl2, pwl4)")),
        }
    }
}

pub(crate) const SIGMOID_1: f64 = 0.731_058_578_630_004_9;
pub(crate) const SIGMOID_4: f64 = 0.982_013_790_037_908_5;
pub(crate) const PWL4_OUTER_SLOPE: f64 = (SIGMOID_4 - SIGMOID_1) / 3.0;
pub(crate) const PWL4_MID_SLOPE: f64 = SIGMOID_1 - 0.5;

/// Literals used by the variants, converted once to the active number type.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SigmoidConsts<V> {
    pub half: V,
    pub quarter: V,
    pub two: V,
    pub minus_two: V,
    pub four: V,
    pub outer_slope: V,
    pub mid_slope: V,
}

impl<V: Copy> SigmoidConsts<V> {
    pub fn new<A: Arith<V = V>>(a: &A) -> Self {
        SigmoidConsts {
            half: a.constant(0.5),
            quarter: a.constant(0.25),
            two: a.constant(2.0),
            minus_two: a.constant(-2.0),
            four: a.constant(4.0),
            outer_slope: a.constant(PWL4_OUTER_SLOPE),
            mid_slope: a.constant(PWL4_MID_SLOPE),
        }
    }
}

pub(crate) fn sigmoid<A: Arith>(a: &mut A, x: A::V, variant: SigmoidVariant, k: &SigmoidConsts<A::V>) -> A::V {
    match variant {
        SigmoidVariant::Exact => {
            let nx = a.neg(x);
            let e = a.exp(nx);
            let one = a.one();
            let d = a.add(one, e);
            a.div(one, d)
        }
        SigmoidVariant::Rational => {
            let one = a.one();
            let ax = a.abs(x);
            let d = a.add(one, ax);
            let q = a.div(x, d);
            let m = a.mul(k.half, q);
            a.add(k.half, m)
        }
        SigmoidVariant::Pwl2 => {
            if a.le(x, k.minus_two) {
                a.zero()
            } else if a.ge(x, k.two) {
                a.one()
            } else {
                let m = a.mul(x, k.quarter);
                a.add(m, k.half)
            }
        }
        SigmoidVariant::Pwl4 => {
            let one = a.one();
            let mut ax = a.abs(x);
            if a.gt(ax, k.four) {
                ax = k.four;
            }
            let y = if a.le(ax, one) {
                let m = a.mul(k.mid_slope, ax);
                a.add(k.half, m)
            } else {
                let knot = a.add(k.half, k.mid_slope);
                let t = a.sub(ax, one);
                let m = a.mul(k.outer_slope, t);
                a.add(knot, m)
            };
            if a.le(a.zero(), x) {
                y
            } else {
                a.sub(one, y)
            }
        }
    }
}
