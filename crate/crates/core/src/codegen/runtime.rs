//! Arithmetic runtimes embedded in generated sources.
//!
//! The fixed-point runtime transcribes `fixedpoint::kernels` into C++ with
//! storage-width values and double-width intermediates; the float helpers
//! transcribe `inference::float_math`. Negative values are never shifted
//! left (undefined before C++20); scaling multiplies by a power of two.

use std::fmt::Write;

use crate::fixedpoint::kernels::{exp_constants, EXP_TERMS};
use crate::fixedpoint::QFormat;
use crate::inference::float_math::{EXP_HI, EXP_LO, EXP_POLY, LN2_HI, LN2_LO, LOG2E};

use super::emit::{float_lit, int_lit};

fn fixed_types(fmt: QFormat) -> (&'static str, &'static str, &'static str) {
    match fmt.total_bits() {
        8 => ("int8_t", "int16_t", "uint16_t"),
        16 => ("int16_t", "int32_t", "uint32_t"),
        _ => ("int32_t", "int64_t", "uint64_t"),
    }
}

/// Typedefs and saturating add/sub/neg/mul/div/exp/sqrt/pow for `fmt`, all
/// named `<p>_fxp_*`.
pub fn gen_fixedpoint_runtime(fmt: QFormat, p: &str) -> String {
    let (storage, wide, uwide) = fixed_types(fmt);
    let m = fmt.frac_bits();
    let total = fmt.total_bits();
    let max = int_lit(fmt.max_raw());
    let min = int_lit(fmt.min_raw());
    let one = int_lit(fmt.one_raw() as i64);
    let (f, ln2) = exp_constants(fmt);
    let ln2 = int_lit(ln2);
    let terms = EXP_TERMS;
    let scale = (1u64 << m) as f64;
    let max_round = fmt.max_raw() as f64 + 0.5;
    let min_round = fmt.min_raw() as f64 - 0.5;
    let isqrt_start = 2 * total - 2;
    let mut s = String::new();
    write!(
        s,
        r#"/* Q{n}.{m} fixed point: {total}-bit storage, {wide_bits}-bit intermediates. */
typedef {storage} {p}_fxp_t;
typedef {wide} {p}_fxp_wide_t;
typedef {uwide} {p}_fxp_uwide_t;

static inline {p}_fxp_t {p}_fxp_sat({p}_fxp_wide_t v) {{
    if (v > {max}) return {max};
    if (v < {min}) return {min};
    return ({p}_fxp_t)v;
}}

static inline {p}_fxp_wide_t {p}_fxp_rshift_round({p}_fxp_wide_t v, int s) {{
    {p}_fxp_wide_t half;
    if (s == 0) return v;
    half = ({p}_fxp_wide_t)1 << (s - 1);
    if (v >= 0) return (v + half) >> s;
    return -((-v + half) >> s);
}}

static inline {p}_fxp_wide_t {p}_fxp_div_round({p}_fxp_wide_t num, {p}_fxp_wide_t den) {{
    int negative = (num < 0) != (den < 0);
    {p}_fxp_uwide_t n = num < 0 ? ({p}_fxp_uwide_t)0 - ({p}_fxp_uwide_t)num : ({p}_fxp_uwide_t)num;
    {p}_fxp_uwide_t d = den < 0 ? ({p}_fxp_uwide_t)0 - ({p}_fxp_uwide_t)den : ({p}_fxp_uwide_t)den;
    {p}_fxp_uwide_t q = n / d;
    {p}_fxp_uwide_t r = n % d;
    if (r >= d - r) q += 1;
    return negative ? -({p}_fxp_wide_t)q : ({p}_fxp_wide_t)q;
}}

static inline {p}_fxp_wide_t {p}_fxp_floor_div({p}_fxp_wide_t num, {p}_fxp_wide_t den) {{
    {p}_fxp_wide_t q = num / den;
    if (num % den != 0 && (num < 0) != (den < 0)) return q - 1;
    return q;
}}

static inline {p}_fxp_t {p}_fxp_add({p}_fxp_t a, {p}_fxp_t b) {{
    return {p}_fxp_sat(({p}_fxp_wide_t)a + b);
}}

static inline {p}_fxp_t {p}_fxp_sub({p}_fxp_t a, {p}_fxp_t b) {{
    return {p}_fxp_sat(({p}_fxp_wide_t)a - b);
}}

static inline {p}_fxp_t {p}_fxp_neg({p}_fxp_t a) {{
    return {p}_fxp_sat(-({p}_fxp_wide_t)a);
}}

static inline {p}_fxp_t {p}_fxp_mul({p}_fxp_t a, {p}_fxp_t b) {{
    return {p}_fxp_sat({p}_fxp_rshift_round(({p}_fxp_wide_t)a * b, {m}));
}}

static inline {p}_fxp_t {p}_fxp_div({p}_fxp_t a, {p}_fxp_t b) {{
    if (b == 0) return a > 0 ? {max} : (a < 0 ? {min} : 0);
    return {p}_fxp_sat({p}_fxp_div_round(({p}_fxp_wide_t)a * (({p}_fxp_wide_t)1 << {m}), b));
}}

static inline {p}_fxp_t {p}_fxp_exp({p}_fxp_t a) {{
    const {p}_fxp_wide_t one = ({p}_fxp_wide_t)1 << {f};
    const {p}_fxp_wide_t ln2 = {ln2};
    {p}_fxp_wide_t x = ({p}_fxp_wide_t)a * (({p}_fxp_wide_t)1 << {fm});
    {p}_fxp_wide_t k = {p}_fxp_floor_div(x + ln2 / 2, ln2);
    {p}_fxp_wide_t r = x - k * ln2;
    {p}_fxp_wide_t acc = one;
    {p}_fxp_wide_t shift;
    int i;
    for (i = {terms}; i >= 1; --i) {{
        acc = one + {p}_fxp_div_round({p}_fxp_rshift_round(acc * r, {f}), i);
    }}
    shift = k + {m} - {f};
    if (shift >= 0) {{
        if (shift >= {total_minus_1} || acc > ({max} >> shift)) return {max};
        return ({p}_fxp_t)(acc << shift);
    }}
    if (-shift > {f_plus_1}) return 0;
    return ({p}_fxp_t){p}_fxp_rshift_round(acc, (int)-shift);
}}

static inline {p}_fxp_t {p}_fxp_sqrt({p}_fxp_t a) {{
    {p}_fxp_uwide_t n;
    {p}_fxp_uwide_t res = 0;
    {p}_fxp_uwide_t bit = ({p}_fxp_uwide_t)1 << {isqrt_start};
    if (a <= 0) return 0;
    n = ({p}_fxp_uwide_t)a << {m};
    while (bit > n) bit >>= 2;
    while (bit != 0) {{
        if (n >= res + bit) {{
            n -= res + bit;
            res = (res >> 1) + bit;
        }} else {{
            res >>= 1;
        }}
        bit >>= 2;
    }}
    if (n > res) res += 1;
    return {p}_fxp_sat(({p}_fxp_wide_t)res);
}}

static inline {p}_fxp_t {p}_fxp_pow({p}_fxp_t a, uint32_t k) {{
    {p}_fxp_t result = 0;
    {p}_fxp_t base = a;
    int have = 0;
    while (k > 0) {{
        if (k & 1u) {{
            result = have ? {p}_fxp_mul(result, base) : base;
            have = 1;
        }}
        k >>= 1;
        if (k > 0) base = {p}_fxp_mul(base, base);
    }}
    return have ? result : {one};
}}

{p}_fxp_t {p}_to_fixed(float x) {{
    double s;
    {p}_fxp_wide_t t;
    double d;
    if (x != x) return 0;
    s = (double)x * {scale};
    if (s >= {max_round}) return {max};
    if (s <= {min_round}) return {min};
    t = ({p}_fxp_wide_t)s;
    d = s - (double)t;
    if (d >= 0.5) t += 1;
    else if (d <= -0.5) t -= 1;
    return ({p}_fxp_t)t;
}}
"#,
        n = fmt.int_bits(),
        wide_bits = 2 * total,
        fm = f - m,
        total_minus_1 = total - 1,
        f_plus_1 = f + 1,
        scale = double_lit(scale),
        max_round = double_lit(max_round),
        min_round = double_lit(min_round),
    )
    .expect("writing to a String cannot fail");
    s
}

fn double_lit(x: f64) -> String {
    format!("{x:?}")
}

/// Portable single-precision exp; bit-identical to the host routine.
pub(crate) fn float_exp(p: &str) -> String {
    let mut poly = format!("    p = {};\n", float_lit(EXP_POLY[0]));
    for c in &EXP_POLY[1..] {
        writeln!(poly, "    p = p * r + {};", float_lit(*c)).expect("writing to a String cannot fail");
    }
    format!(
        r#"static inline float {p}_pow2(int e) {{
    union {{
        uint32_t u;
        float f;
    }} v;
    v.u = (uint32_t)(e + 127) << 23;
    return v.f;
}}

static inline float {p}_exp(float x) {{
    float t;
    float kf;
    float r;
    float p;
    int k;
    int k1;
    if (x != x) return x;
    if (x > {hi}) return {p}_pow2(127) * 2.0f;
    if (x < {lo}) return 0.0f;
    t = x * {log2e};
    k = (int)(t + (t >= 0.0f ? 0.5f : -0.5f));
    kf = (float)k;
    r = (x - kf * {ln2_hi}) - kf * {ln2_lo};
{poly}    k1 = k / 2;
    return (p * {p}_pow2(k1)) * {p}_pow2(k - k1);
}}
"#,
        hi = float_lit(EXP_HI),
        lo = float_lit(EXP_LO),
        log2e = float_lit(LOG2E),
        ln2_hi = float_lit(LN2_HI),
        ln2_lo = float_lit(LN2_LO),
    )
}

/// Square-and-multiply integer power in single precision.
pub(crate) fn float_pow(p: &str) -> String {
    format!(
        r#"static inline float {p}_pow(float a, uint32_t k) {{
    float result = 0.0f;
    float base = a;
    int have = 0;
    while (k > 0) {{
        if (k & 1u) {{
            result = have ? result * base : base;
            have = 1;
        }}
        k >>= 1;
        if (k > 0) base = base * base;
    }}
    return have ? result : 1.0f;
}}
"#
    )
}
