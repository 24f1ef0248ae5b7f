//! Qn.m fixed-point arithmetic with saturation and under/overflow counters.
//!
//! A value in Qn.m is a two's-complement integer `raw` of `n + m` bits
//! denoting `raw · 2^-m`. Every operation rounds half away from zero and
//! saturates to the format's range instead of wrapping. Counters live in an
//! explicit [`EvalContext`] so independent evaluations never share state.
//!
//! Underflow is counted when an operation with a non-zero operand has a
//! non-zero exact result that rounds to raw 0.

pub(crate) mod kernels;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FixedPointError {
    #[error("operand formats differ: {0} vs {1}")]
    FormatMismatch(QFormat, QFormat),
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of a negative value")]
    NegativeInput,
    #[error("invalid Q format: {0}")]
    InvalidFormat(String),
    #[error("raw value {raw} does not fit in {format}")]
    RawOutOfRange { raw: i64, format: QFormat },
}

/// A Qn.m format: `n` integer bits (sign included) and `m` fraction bits,
/// stored in 8, 16 or 32 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct QFormat {
    int_bits: u32,
    frac_bits: u32,
}

impl QFormat {
    /// Default 32-bit format.
    pub const Q22_10: QFormat = QFormat {
        int_bits: 22,
        frac_bits: 10,
    };
    /// Default 16-bit format.
    pub const Q12_4: QFormat = QFormat {
        int_bits: 12,
        frac_bits: 4,
    };
    /// Default 8-bit format.
    pub const Q4_4: QFormat = QFormat {
        int_bits: 4,
        frac_bits: 4,
    };

    pub fn new(int_bits: u32, frac_bits: u32) -> Result<Self, FixedPointError> {
        let total = int_bits + frac_bits;
        if int_bits == 0 {
            return Err(FixedPointError::InvalidFormat(format!(
                "Q{int_bits}.{frac_bits}: at least one integer (sign) bit is required"
            )));
        }
        if !matches!(total, 8 | 16 | 32) {
            return Err(FixedPointError::InvalidFormat(format!(
                "Q{int_bits}.{frac_bits}: total width {total} is not 8, 16 or 32"
            )));
        }
        Ok(QFormat { int_bits, frac_bits })
    }

    pub fn total_bits(self) -> u32 {
        self.int_bits + self.frac_bits
    }

    pub fn int_bits(self) -> u32 {
        self.int_bits
    }

    pub fn frac_bits(self) -> u32 {
        self.frac_bits
    }

    pub fn max_raw(self) -> i64 {
        (1i64 << (self.total_bits() - 1)) - 1
    }

    pub fn min_raw(self) -> i64 {
        -(1i64 << (self.total_bits() - 1))
    }

    /// Smallest positive step, `2^-m`.
    pub fn resolution(self) -> f64 {
        1.0 / (1u64 << self.frac_bits) as f64
    }

    pub fn max_value(self) -> f64 {
        self.max_raw() as f64 * self.resolution()
    }

    pub fn min_value(self) -> f64 {
        self.min_raw() as f64 * self.resolution()
    }

    /// Raw encoding of 1.0, saturated for formats that cannot hold it.
    pub fn one_raw(self) -> i32 {
        (1i64 << self.frac_bits).min(self.max_raw()) as i32
    }

    pub fn storage_bytes(self) -> usize {
        self.total_bits() as usize / 8
    }

    pub fn contains_raw(self, raw: i64) -> bool {
        (self.min_raw()..=self.max_raw()).contains(&raw)
    }
}

impl fmt::Display for QFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}.{}", self.int_bits, self.frac_bits)
    }
}

impl FromStr for QFormat {
    type Err = FixedPointError;

    /// Accepts `Q22.10`, `q22.10` or `22.10`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s.trim().trim_start_matches(['Q', 'q']);
        let bad = || FixedPointError::InvalidFormat(format!("cannot parse {s:?}, expected n.m"));
        let (n, m) = body.split_once('.').ok_or_else(bad)?;
        let n = n.parse().map_err(|_| bad())?;
        let m = m.parse().map_err(|_| bad())?;
        QFormat::new(n, m)
    }
}

impl From<QFormat> for String {
    fn from(q: QFormat) -> String {
        q.to_string()
    }
}

impl TryFrom<String> for QFormat {
    type Error = FixedPointError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// A raw scaled integer in a given format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedValue {
    raw: i32,
    format: QFormat,
}

impl FixedValue {
    pub fn from_raw(raw: i64, format: QFormat) -> Result<Self, FixedPointError> {
        if format.contains_raw(raw) {
            Ok(FixedValue {
                raw: raw as i32,
                format,
            })
        } else {
            Err(FixedPointError::RawOutOfRange { raw, format })
        }
    }

    pub(crate) fn new_unchecked(raw: i32, format: QFormat) -> Self {
        debug_assert!(format.contains_raw(raw as i64));
        FixedValue { raw, format }
    }

    pub fn raw(self) -> i32 {
        self.raw
    }

    pub fn format(self) -> QFormat {
        self.format
    }

    /// The real number denoted, `raw · 2^-m`; exact in `f64`.
    pub fn value(self) -> f64 {
        from_fixed(self)
    }
}

pub fn from_fixed(v: FixedValue) -> f64 {
    v.raw as f64 * v.format.resolution()
}

/// Arithmetic event counts for one evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounters {
    pub overflow_count: u64,
    pub underflow_count: u64,
    pub op_count: u64,
}

impl OpCounters {
    pub fn merge(&mut self, other: &OpCounters) {
        self.overflow_count += other.overflow_count;
        self.underflow_count += other.underflow_count;
        self.op_count += other.op_count;
    }

    pub fn underflow_rate(&self) -> f64 {
        ratio(self.underflow_count, self.op_count)
    }

    pub fn overflow_rate(&self) -> f64 {
        ratio(self.overflow_count, self.op_count)
    }
}

fn ratio(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

/// Owner of the counters for one evaluation. Not meant to be shared across
/// threads; create one per worker and [`OpCounters::merge`] afterwards.
#[derive(Debug, Clone, Default)]
pub struct EvalContext {
    counters: OpCounters,
}

impl EvalContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn counters(&self) -> OpCounters {
        self.counters
    }

    pub fn reset(&mut self) {
        self.counters = OpCounters::default();
    }

    pub(crate) fn absorb(&mut self, other: &OpCounters) {
        self.counters.merge(other);
    }

    /// Rounds `x · 2^m` half away from zero and saturates.
    pub fn to_fixed(&mut self, x: f64, format: QFormat) -> FixedValue {
        let raw = kernels::to_fixed(x, format, &mut self.counters);
        FixedValue::new_unchecked(raw, format)
    }

    fn same(a: FixedValue, b: FixedValue) -> Result<QFormat, FixedPointError> {
        if a.format == b.format {
            Ok(a.format)
        } else {
            Err(FixedPointError::FormatMismatch(a.format, b.format))
        }
    }

    pub fn add(&mut self, a: FixedValue, b: FixedValue) -> Result<FixedValue, FixedPointError> {
        let f = Self::same(a, b)?;
        Ok(FixedValue::new_unchecked(
            kernels::add(a.raw, b.raw, f, &mut self.counters),
            f,
        ))
    }

    pub fn sub(&mut self, a: FixedValue, b: FixedValue) -> Result<FixedValue, FixedPointError> {
        let f = Self::same(a, b)?;
        Ok(FixedValue::new_unchecked(
            kernels::sub(a.raw, b.raw, f, &mut self.counters),
            f,
        ))
    }

    pub fn neg(&mut self, a: FixedValue) -> FixedValue {
        FixedValue::new_unchecked(kernels::neg(a.raw, a.format, &mut self.counters), a.format)
    }

    /// Double-width product shifted right by `m` with rounding, then
    /// saturated.
    pub fn mul(&mut self, a: FixedValue, b: FixedValue) -> Result<FixedValue, FixedPointError> {
        let f = Self::same(a, b)?;
        Ok(FixedValue::new_unchecked(
            kernels::mul(a.raw, b.raw, f, &mut self.counters),
            f,
        ))
    }

    /// `(a << m) / b` rounded to nearest, then saturated.
    pub fn div(&mut self, a: FixedValue, b: FixedValue) -> Result<FixedValue, FixedPointError> {
        let f = Self::same(a, b)?;
        if b.raw == 0 {
            return Err(FixedPointError::DivisionByZero);
        }
        Ok(FixedValue::new_unchecked(
            kernels::div(a.raw, b.raw, f, &mut self.counters),
            f,
        ))
    }

    pub fn exp(&mut self, a: FixedValue) -> FixedValue {
        FixedValue::new_unchecked(kernels::exp(a.raw, a.format, &mut self.counters), a.format)
    }

    /// Rounded to the nearest representable value.
    pub fn sqrt(&mut self, a: FixedValue) -> Result<FixedValue, FixedPointError> {
        if a.raw < 0 {
            return Err(FixedPointError::NegativeInput);
        }
        Ok(FixedValue::new_unchecked(
            kernels::sqrt(a.raw, a.format, &mut self.counters),
            a.format,
        ))
    }

    pub fn pow_int(&mut self, a: FixedValue, k: u32) -> FixedValue {
        FixedValue::new_unchecked(kernels::pow_int(a.raw, k, a.format, &mut self.counters), a.format)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q22: QFormat = QFormat::Q22_10;
    const Q12: QFormat = QFormat::Q12_4;

    fn fx(raw: i64, f: QFormat) -> FixedValue {
        FixedValue::from_raw(raw, f).unwrap()
    }

    #[test]
    fn format_parsing() {
        assert_eq!("22.10".parse::<QFormat>().unwrap(), Q22);
        assert_eq!("Q12.4".parse::<QFormat>().unwrap(), Q12);
        assert!("20.10".parse::<QFormat>().is_err());
        assert!("0.16".parse::<QFormat>().is_err());
        assert!("abc".parse::<QFormat>().is_err());
        assert_eq!(Q22.to_string(), "Q22.10");
        assert_eq!(Q12.max_value(), 2048.0 - 0.0625);
        assert_eq!(Q12.min_value(), -2048.0);
    }

    #[test]
    fn conversion_examples() {
        let mut c = EvalContext::new();
        assert_eq!(c.to_fixed(1.5, Q22).raw(), 1536);
        assert_eq!(c.to_fixed(-0.5, Q12).raw(), -8);
        assert_eq!(c.counters().overflow_count, 0);
        assert_eq!(c.to_fixed(3.0e6, Q22).raw(), i32::MAX);
        assert_eq!(c.counters().overflow_count, 1);
        assert_eq!(fx(1024, Q22).value(), 1.0);
        assert_eq!(fx(-8, Q12).value(), -0.5);
    }

    #[test]
    fn conversion_rounds_half_away() {
        let mut c = EvalContext::new();
        assert_eq!(c.to_fixed(0.03125, Q12).raw(), 1);
        assert_eq!(c.to_fixed(-0.03125, Q12).raw(), -1);
        assert_eq!(c.to_fixed(0.03, Q12).raw(), 0);
        assert_eq!(c.counters().underflow_count, 1);
        assert_eq!(c.to_fixed(0.0, Q12).raw(), 0);
        assert_eq!(c.counters().underflow_count, 1);
    }

    #[test]
    fn add_examples() {
        let mut c = EvalContext::new();
        let one = fx(1024, Q22);
        assert_eq!(c.add(one, one).unwrap().raw(), 2048);
        let max = fx(Q22.max_raw(), Q22);
        let step = fx(1, Q22);
        assert_eq!(c.add(max, step).unwrap(), max);
        assert_eq!(c.counters().overflow_count, 1);
        let a = fx(1, Q12);
        let b = fx(-1, Q12);
        assert_eq!(c.add(a, b).unwrap().raw(), 0);
        assert_eq!(c.counters().underflow_count, 0);
        assert!(matches!(c.add(a, one), Err(FixedPointError::FormatMismatch(..))));
    }

    #[test]
    fn sub_and_neg_saturate() {
        let mut c = EvalContext::new();
        let min = fx(Q12.min_raw(), Q12);
        assert_eq!(c.neg(min).raw() as i64, Q12.max_raw());
        assert_eq!(c.sub(min, fx(1, Q12)).unwrap(), min);
        assert_eq!(c.counters().overflow_count, 2);
    }

    #[test]
    fn mul_examples() {
        let mut c = EvalContext::new();
        let r = c.mul(fx(2560, Q22), fx(4096, Q22)).unwrap();
        assert_eq!(r.raw(), 10240);
        let tiny = fx(1, Q12);
        assert_eq!(c.mul(tiny, tiny).unwrap().raw(), 0);
        assert_eq!(c.counters().underflow_count, 1);
        assert_eq!(c.mul(tiny, fx(0, Q12)).unwrap().raw(), 0);
        assert_eq!(c.counters().underflow_count, 1);
        // -1.5 * 0.0625 = -0.09375 = -1.5 steps, rounds away to -2
        assert_eq!(c.mul(fx(-24, Q12), tiny).unwrap().raw(), -2);
    }

    #[test]
    fn div_examples() {
        let mut c = EvalContext::new();
        assert_eq!(c.div(fx(10240, Q22), fx(4096, Q22)).unwrap().value(), 2.5);
        for raw in [1i64, -3, 77, 1024, -99999, 1 << 20] {
            let x = fx(raw, Q22);
            assert_eq!(c.div(x, x).unwrap().raw(), 1024);
        }
        assert_eq!(c.div(fx(1, Q22), fx(0, Q22)), Err(FixedPointError::DivisionByZero));
        assert_eq!(c.div(fx(1, Q12), fx(Q12.max_raw(), Q12)).unwrap().raw(), 0);
        assert_eq!(c.counters().underflow_count, 1);
    }

    #[test]
    fn exp_examples() {
        let mut c = EvalContext::new();
        assert_eq!(c.exp(fx(0, Q22)).raw(), 1024);
        assert_eq!(c.exp(fx(0, Q12)).raw(), 16);
        let e = c.exp(fx(1024, Q22)).raw();
        assert!((2782..=2784).contains(&e), "{e}");
        let before = c.counters().underflow_count;
        assert_eq!(c.exp(fx(-20 * 1024, Q22)).raw(), 0);
        assert_eq!(c.counters().underflow_count, before + 1);
        let big = c.exp(fx(100 * 1024, Q22));
        assert_eq!(big.raw() as i64, Q22.max_raw());
        assert!(c.exp(fx(Q22.min_raw(), Q22)).raw() == 0);
        assert!(c.exp(fx(Q22.max_raw(), Q22)).raw() as i64 == Q22.max_raw());
    }

    #[test]
    fn sqrt_examples() {
        let mut c = EvalContext::new();
        assert_eq!(c.sqrt(fx(4096, Q22)).unwrap().raw(), 2048);
        assert_eq!(c.sqrt(fx(0, Q22)).unwrap().raw(), 0);
        assert_eq!(c.sqrt(fx(-1, Q22)), Err(FixedPointError::NegativeInput));
        assert_eq!(c.sqrt(fx(Q12.max_raw(), Q12)).unwrap().raw(), 724);
    }

    #[test]
    fn pow_examples() {
        let mut c = EvalContext::new();
        for raw in [-5000i64, 0, 3, 1536] {
            assert_eq!(c.pow_int(fx(raw, Q22), 0).raw(), 1024);
        }
        assert_eq!(c.pow_int(fx(1536, Q22), 2).raw(), 2304);
        let a = fx(1234, Q22);
        let aa = c.mul(a, a).unwrap();
        let aaa = c.mul(aa, a).unwrap();
        assert_eq!(c.pow_int(a, 3), aaa);
        assert_eq!(c.pow_int(a, 1), a);
    }

    #[test]
    fn raw_range_checked() {
        assert!(FixedValue::from_raw(1 << 15, Q12).is_err());
        assert!(FixedValue::from_raw(-(1 << 15), Q12).is_ok());
    }

    #[test]
    fn rates() {
        let c = OpCounters {
            overflow_count: 1,
            underflow_count: 3,
            op_count: 10,
        };
        assert_eq!(c.underflow_rate(), 0.3);
        assert_eq!(c.overflow_rate(), 0.1);
        assert_eq!(OpCounters::default().underflow_rate(), 0.0);
    }
}
