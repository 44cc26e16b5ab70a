//! Minimal field abstraction so parabola formulas run on `f64` and `Complex64`.

use num_complex::Complex64;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + From<f64>
    + std::fmt::Debug
    + Send
    + Sync
{
    fn exp(self) -> Self;
    fn abs(self) -> f64;
    fn re(self) -> f64;
    fn to_complex(self) -> Complex64;
}

impl Scalar for f64 {
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn re(self) -> f64 {
        self
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn re(self) -> f64 {
        self.re
    }
    fn to_complex(self) -> Complex64 {
        self
    }
}
