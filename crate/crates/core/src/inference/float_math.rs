//! Portable single-precision `exp`.
//!
//! Generated code must not depend on `<math.h>`, and host/target parity must
//! be bit-exact, so both sides use this routine: Cody-Waite reduction by
//! `ln 2`, a degree-7 Taylor polynomial, and scaling by `2^k` split in two
//! steps so subnormal results round once. Every step is a plain IEEE single
//! operation (no fused multiply-add).

pub(crate) const LOG2E: f32 = std::f32::consts::LOG2_E;
#[allow(clippy::excessive_precision)]
pub(crate) const LN2_HI: f32 = 0.693_145_751_953_125_f32;
#[allow(clippy::excessive_precision)]
pub(crate) const LN2_LO: f32 = 1.428_606_765_330_187e-6_f32;
pub(crate) const EXP_HI: f32 = 88.722_83_f32;
pub(crate) const EXP_LO: f32 = -103.972_08_f32;
/// Taylor coefficients `1/7!, 1/6!, ..., 1/1!, 1/0!`, Horner order.
pub(crate) const EXP_POLY: [f32; 8] = [
    1.0 / 5040.0,
    1.0 / 720.0,
    1.0 / 120.0,
    1.0 / 24.0,
    1.0 / 6.0,
    0.5,
    1.0,
    1.0,
];

#[inline]
fn pow2(e: i32) -> f32 {
    debug_assert!((-126..=127).contains(&e));
    f32::from_bits(((e + 127) as u32) << 23)
}

pub fn flt_exp(x: f32) -> f32 {
    if x.is_nan() {
        return x;
    }
    if x > EXP_HI {
        return f32::INFINITY;
    }
    if x < EXP_LO {
        return 0.0;
    }
    let t = x * LOG2E;
    let k = (t + if t >= 0.0 { 0.5 } else { -0.5 }) as i32;
    let kf = k as f32;
    let hi = kf * LN2_HI;
    let lo = kf * LN2_LO;
    let r = (x - hi) - lo;
    let mut p = EXP_POLY[0];
    for &c in &EXP_POLY[1..] {
        p = p * r + c;
    }
    let k1 = k / 2;
    let k2 = k - k1;
    (p * pow2(k1)) * pow2(k2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_close_to_libm() {
        let mut worst = 0.0f64;
        let mut x = -87.0f32;
        while x < 88.0 {
            let got = flt_exp(x) as f64;
            let want = (x as f64).exp();
            worst = worst.max(((got - want) / want).abs());
            x += 0.0137;
        }
        assert!(worst < 4.0 * f32::EPSILON as f64, "relative error {worst}");
    }

    #[test]
    fn exp_edges() {
        assert_eq!(flt_exp(0.0), 1.0);
        assert_eq!(flt_exp(200.0), f32::INFINITY);
        assert_eq!(flt_exp(-200.0), 0.0);
        assert!(flt_exp(-100.0) > 0.0);
        assert!(flt_exp(f32::NAN).is_nan());
    }
}
