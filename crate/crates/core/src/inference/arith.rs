use crate::fixedpoint::{kernels, OpCounters, QFormat};

use super::float_math::flt_exp;

/// The scalar operations a model needs, over either IEEE single or Qn.m.
/// Generated code performs exactly these operations in exactly this order.
pub(crate) trait Arith: Clone {
    type V: Copy + std::fmt::Debug;

    /// Model parameter or literal; not counted.
    fn constant(&self, x: f64) -> Self::V;
    /// Feature value entering the model; counted in fixed point.
    fn input(&mut self, x: f64) -> Self::V;
    fn zero(&self) -> Self::V;
    fn one(&self) -> Self::V;
    fn add(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn sub(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn mul(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn div(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn neg(&mut self, a: Self::V) -> Self::V;
    fn exp(&mut self, a: Self::V) -> Self::V;
    fn pow_int(&mut self, a: Self::V, k: u32) -> Self::V;
    fn le(&self, a: Self::V, b: Self::V) -> bool;
    fn real(&self, a: Self::V) -> f64;
    fn raw(&self, a: Self::V) -> Option<i64>;
    fn counters(&self) -> OpCounters;
    fn fresh(&self) -> Self;

    fn gt(&self, a: Self::V, b: Self::V) -> bool {
        !self.le(a, b)
    }

    fn ge(&self, a: Self::V, b: Self::V) -> bool {
        self.le(b, a)
    }

    fn abs(&mut self, a: Self::V) -> Self::V {
        let z = self.zero();
        if self.le(z, a) {
            a
        } else {
            self.neg(a)
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct FloatArith;

impl Arith for FloatArith {
    type V = f32;

    fn constant(&self, x: f64) -> f32 {
        x as f32
    }
    fn input(&mut self, x: f64) -> f32 {
        x as f32
    }
    fn zero(&self) -> f32 {
        0.0
    }
    fn one(&self) -> f32 {
        1.0
    }
    fn add(&mut self, a: f32, b: f32) -> f32 {
        a + b
    }
    fn sub(&mut self, a: f32, b: f32) -> f32 {
        a - b
    }
    fn mul(&mut self, a: f32, b: f32) -> f32 {
        a * b
    }
    fn div(&mut self, a: f32, b: f32) -> f32 {
        a / b
    }
    fn neg(&mut self, a: f32) -> f32 {
        -a
    }
    fn exp(&mut self, a: f32) -> f32 {
        flt_exp(a)
    }
    fn pow_int(&mut self, a: f32, mut k: u32) -> f32 {
        let mut result: Option<f32> = None;
        let mut base = a;
        while k > 0 {
            if k & 1 == 1 {
                result = Some(match result {
                    Some(r) => r * base,
                    None => base,
                });
            }
            k >>= 1;
            if k > 0 {
                base = base * base;
            }
        }
        result.unwrap_or(1.0)
    }
    fn le(&self, a: f32, b: f32) -> bool {
        a <= b
    }
    fn gt(&self, a: f32, b: f32) -> bool {
        a > b
    }
    fn ge(&self, a: f32, b: f32) -> bool {
        a >= b
    }
    fn real(&self, a: f32) -> f64 {
        a as f64
    }
    fn raw(&self, _: f32) -> Option<i64> {
        None
    }
    fn counters(&self) -> OpCounters {
        OpCounters::default()
    }
    fn fresh(&self) -> Self {
        FloatArith
    }
}

#[derive(Debug, Clone)]
pub(crate) struct FixedArith {
    pub fmt: QFormat,
    pub counters: OpCounters,
}

impl FixedArith {
    pub fn new(fmt: QFormat) -> Self {
        FixedArith {
            fmt,
            counters: OpCounters::default(),
        }
    }
}

impl Arith for FixedArith {
    type V = i32;

    fn constant(&self, x: f64) -> i32 {
        kernels::constant(x, self.fmt)
    }
    fn input(&mut self, x: f64) -> i32 {
        kernels::to_fixed(x as f32 as f64, self.fmt, &mut self.counters)
    }
    fn zero(&self) -> i32 {
        0
    }
    fn one(&self) -> i32 {
        self.fmt.one_raw()
    }
    fn add(&mut self, a: i32, b: i32) -> i32 {
        kernels::add(a, b, self.fmt, &mut self.counters)
    }
    fn sub(&mut self, a: i32, b: i32) -> i32 {
        kernels::sub(a, b, self.fmt, &mut self.counters)
    }
    fn mul(&mut self, a: i32, b: i32) -> i32 {
        kernels::mul(a, b, self.fmt, &mut self.counters)
    }
    fn div(&mut self, a: i32, b: i32) -> i32 {
        kernels::div(a, b, self.fmt, &mut self.counters)
    }
    fn neg(&mut self, a: i32) -> i32 {
        kernels::neg(a, self.fmt, &mut self.counters)
    }
    fn exp(&mut self, a: i32) -> i32 {
        kernels::exp(a, self.fmt, &mut self.counters)
    }
    fn pow_int(&mut self, a: i32, k: u32) -> i32 {
        kernels::pow_int(a, k, self.fmt, &mut self.counters)
    }
    fn le(&self, a: i32, b: i32) -> bool {
        a <= b
    }
    fn real(&self, a: i32) -> f64 {
        a as f64 * self.fmt.resolution()
    }
    fn raw(&self, a: i32) -> Option<i64> {
        Some(a as i64)
    }
    fn counters(&self) -> OpCounters {
        self.counters
    }
    fn fresh(&self) -> Self {
        FixedArith::new(self.fmt)
    }
}
