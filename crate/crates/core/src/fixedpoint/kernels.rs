//! Raw-integer kernels shared by [`super::EvalContext`] and the inference
//! engine. The C++ runtime emitted by `codegen::runtime` is a line-by-line
//! transcription of these functions; keep the two in lockstep.
//!
//! All intermediates fit in twice the storage width, so the emitted code can
//! use `int64_t` for 32-bit formats and `int32_t` for 16-bit ones.

use super::{OpCounters, QFormat};

/// Number of Horner steps in the `exp` polynomial.
pub(crate) const EXP_TERMS: i64 = 8;

/// Arithmetic shift right by `s` rounding half away from zero.
#[inline]
pub(crate) fn rshift_round(v: i64, s: u32) -> i64 {
    if s == 0 {
        return v;
    }
    let half = 1i64 << (s - 1);
    if v >= 0 {
        (v + half) >> s
    } else {
        -((-v + half) >> s)
    }
}

/// `num / den` rounding half away from zero. `den` must be non-zero.
#[inline]
pub(crate) fn div_round(num: i64, den: i64) -> i64 {
    let negative = (num < 0) != (den < 0);
    let n = num.unsigned_abs();
    let d = den.unsigned_abs();
    let mut q = n / d;
    let r = n % d;
    if r >= d - r {
        q += 1;
    }
    if negative {
        -(q as i64)
    } else {
        q as i64
    }
}

#[inline]
pub(crate) fn floor_div(num: i64, den: i64) -> i64 {
    let q = num / den;
    if num % den != 0 && (num < 0) != (den < 0) {
        q - 1
    } else {
        q
    }
}

#[inline]
pub(crate) fn saturate(v: i64, fmt: QFormat, c: &mut OpCounters) -> i32 {
    if v > fmt.max_raw() {
        c.overflow_count += 1;
        fmt.max_raw() as i32
    } else if v < fmt.min_raw() {
        c.overflow_count += 1;
        fmt.min_raw() as i32
    } else {
        v as i32
    }
}

/// Saturating conversion without touching any counters; used for constants
/// baked into generated code.
pub(crate) fn constant(x: f64, fmt: QFormat) -> i32 {
    let mut scratch = OpCounters::default();
    to_fixed(x, fmt, &mut scratch)
}

pub(crate) fn to_fixed(x: f64, fmt: QFormat, c: &mut OpCounters) -> i32 {
    c.op_count += 1;
    if x.is_nan() {
        return 0;
    }
    let scaled = (x * (1u64 << fmt.frac_bits()) as f64).round();
    let raw = if scaled > fmt.max_raw() as f64 {
        c.overflow_count += 1;
        fmt.max_raw() as i32
    } else if scaled < fmt.min_raw() as f64 {
        c.overflow_count += 1;
        fmt.min_raw() as i32
    } else {
        scaled as i32
    };
    if raw == 0 && x != 0.0 {
        c.underflow_count += 1;
    }
    raw
}

pub(crate) fn add(a: i32, b: i32, fmt: QFormat, c: &mut OpCounters) -> i32 {
    c.op_count += 1;
    saturate(a as i64 + b as i64, fmt, c)
}

pub(crate) fn sub(a: i32, b: i32, fmt: QFormat, c: &mut OpCounters) -> i32 {
    c.op_count += 1;
    saturate(a as i64 - b as i64, fmt, c)
}

pub(crate) fn neg(a: i32, fmt: QFormat, c: &mut OpCounters) -> i32 {
    c.op_count += 1;
    saturate(-(a as i64), fmt, c)
}

pub(crate) fn mul(a: i32, b: i32, fmt: QFormat, c: &mut OpCounters) -> i32 {
    c.op_count += 1;
    let p = a as i64 * b as i64;
    let r = saturate(rshift_round(p, fmt.frac_bits()), fmt, c);
    if r == 0 && p != 0 {
        c.underflow_count += 1;
    }
    r
}

/// Division with a zero divisor saturates toward the sign of `a` (0/0 is 0).
pub(crate) fn div(a: i32, b: i32, fmt: QFormat, c: &mut OpCounters) -> i32 {
    c.op_count += 1;
    if b == 0 {
        return match a.signum() {
            0 => 0,
            s => {
                c.overflow_count += 1;
                if s > 0 {
                    fmt.max_raw() as i32
                } else {
                    fmt.min_raw() as i32
                }
            }
        };
    }
    let num = (a as i64) << fmt.frac_bits();
    let r = saturate(div_round(num, b as i64), fmt, c);
    if r == 0 && a != 0 {
        c.underflow_count += 1;
    }
    r
}

/// Internal fraction bits and `round(ln 2 · 2^F)` for the exp routine.
pub(crate) fn exp_constants(fmt: QFormat) -> (u32, i64) {
    let f = fmt.total_bits() - 1;
    let ln2 = (std::f64::consts::LN_2 * (1u64 << f) as f64).round() as i64;
    (f, ln2)
}

/// `e^a` by range reduction `a = k·ln2 + r`, `|r| <= ln2/2`, a Horner
/// polynomial in `r` at `F = total_bits - 1` fraction bits, then a shift by
/// `k`.
pub(crate) fn exp(a: i32, fmt: QFormat, c: &mut OpCounters) -> i32 {
    c.op_count += 1;
    let m = fmt.frac_bits();
    let (f, ln2) = exp_constants(fmt);
    let one = 1i64 << f;
    let x = (a as i64) << (f - m);
    let k = floor_div(x + ln2 / 2, ln2);
    let r = x - k * ln2;
    let mut acc = one;
    let mut i = EXP_TERMS;
    while i >= 1 {
        acc = one + div_round(rshift_round(acc * r, f), i);
        i -= 1;
    }
    let shift = k + m as i64 - f as i64;
    let raw = if shift >= 0 {
        if shift >= fmt.total_bits() as i64 - 1 || acc > fmt.max_raw() >> shift {
            c.overflow_count += 1;
            fmt.max_raw() as i32
        } else {
            (acc << shift) as i32
        }
    } else if -shift > f as i64 + 1 {
        0
    } else {
        rshift_round(acc, (-shift) as u32) as i32
    };
    if raw == 0 {
        c.underflow_count += 1;
    }
    raw
}

/// Integer square root of `n`, rounded to nearest.
pub(crate) fn isqrt_round(mut n: u64, bits: u32) -> u64 {
    let original = n;
    let mut res = 0u64;
    let mut bit = 1u64 << (2 * bits - 2);
    while bit > n {
        bit >>= 2;
    }
    while bit != 0 {
        if n >= res + bit {
            n -= res + bit;
            res = (res >> 1) + bit;
        } else {
            res >>= 1;
        }
        bit >>= 2;
    }
    debug_assert_eq!(original - res * res, n);
    if n > res {
        res + 1
    } else {
        res
    }
}

/// Negative inputs return 0; the checked API rejects them before this point.
pub(crate) fn sqrt(a: i32, fmt: QFormat, c: &mut OpCounters) -> i32 {
    c.op_count += 1;
    if a <= 0 {
        return 0;
    }
    let n = (a as u64) << fmt.frac_bits();
    saturate(isqrt_round(n, fmt.total_bits()) as i64, fmt, c)
}

/// Square-and-multiply over [`mul`]; `k = 0` yields 1.0 (saturated when the
/// format cannot hold it).
pub(crate) fn pow_int(a: i32, mut k: u32, fmt: QFormat, c: &mut OpCounters) -> i32 {
    let mut result: Option<i32> = None;
    let mut base = a;
    while k > 0 {
        if k & 1 == 1 {
            result = Some(match result {
                Some(r) => mul(r, base, fmt, c),
                None => base,
            });
        }
        k >>= 1;
        if k > 0 {
            base = mul(base, base, fmt, c);
        }
    }
    result.unwrap_or_else(|| fmt.one_raw())
}
