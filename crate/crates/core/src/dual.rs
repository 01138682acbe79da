//! Minimal forward-mode automatic differentiation over three seed directions,
//! enough to get exact Jacobians of the steering residuals.

#![allow(clippy::suspicious_arithmetic_impl)]

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar arithmetic the steering formulas need, implemented for `f64` and
/// for [`Dual3`].
pub(crate) trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(x: f64) -> Self;
    fn re(&self) -> f64;
    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
}

impl Real for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn re(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dual3 {
    pub re: f64,
    pub eps: [f64; 3],
}

impl Dual3 {
    pub fn var(re: f64, index: usize) -> Self {
        let mut eps = [0.0; 3];
        eps[index] = 1.0;
        Dual3 { re, eps }
    }

    #[inline]
    fn chain(self, f: f64, df: f64) -> Self {
        Dual3 {
            re: f,
            eps: self.eps.map(|e| e * df),
        }
    }
}

impl Real for Dual3 {
    fn cst(x: f64) -> Self {
        Dual3 { re: x, eps: [0.0; 3] }
    }
    fn re(&self) -> f64 {
        self.re
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn ln(self) -> Self {
        self.chain(self.re.ln(), self.re.recip())
    }
}

impl Add for Dual3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual3 {
            re: self.re + o.re,
            eps: [self.eps[0] + o.eps[0], self.eps[1] + o.eps[1], self.eps[2] + o.eps[2]],
        }
    }
}

impl Sub for Dual3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual3 {
            re: self.re - o.re,
            eps: [self.eps[0] - o.eps[0], self.eps[1] - o.eps[1], self.eps[2] - o.eps[2]],
        }
    }
}

impl Mul for Dual3 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let e = |i: usize| self.eps[i] * o.re + self.re * o.eps[i];
        Dual3 {
            re: self.re * o.re,
            eps: [e(0), e(1), e(2)],
        }
    }
}

impl Div for Dual3 {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = o.re.recip();
        let q = self.re * inv;
        let e = |i: usize| (self.eps[i] - q * o.eps[i]) * inv;
        Dual3 {
            re: q,
            eps: [e(0), e(1), e(2)],
        }
    }
}

impl Neg for Dual3 {
    type Output = Self;
    fn neg(self) -> Self {
        Dual3 {
            re: -self.re,
            eps: self.eps.map(|e| -e),
        }
    }
}

impl Add<f64> for Dual3 {
    type Output = Self;
    fn add(self, o: f64) -> Self {
        Dual3 { re: self.re + o, eps: self.eps }
    }
}

impl Sub<f64> for Dual3 {
    type Output = Self;
    fn sub(self, o: f64) -> Self {
        Dual3 { re: self.re - o, eps: self.eps }
    }
}

impl Mul<f64> for Dual3 {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        Dual3 {
            re: self.re * o,
            eps: self.eps.map(|e| e * o),
        }
    }
}

impl Div<f64> for Dual3 {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        self * o.recip()
    }
}
