//! Hyper-dual numbers: exact first and mixed second derivatives by forward
//! evaluation. A chart map written once over [`Real`] yields analytic jets.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar arithmetic needed by chart maps.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + std::fmt::Debug
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn asinh(self) -> Self;

    fn scale(self, k: f64) -> Self {
        self * Self::cst(k)
    }
}

impl Real for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn asinh(self) -> Self {
        f64::asinh(self)
    }
}

/// `v + d1 ε₁ + d2 ε₂ + d12 ε₁ε₂` with `ε₁² = ε₂² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperDual {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d12: f64,
}

impl HyperDual {
    pub fn new(v: f64, d1: f64, d2: f64) -> Self {
        Self { v, d1, d2, d12: 0.0 }
    }

    /// Chain rule for a scalar function with value `f`, derivative `df` and
    /// second derivative `ddf` at `self.v`.
    fn lift(self, f: f64, df: f64, ddf: f64) -> Self {
        Self {
            v: f,
            d1: df * self.d1,
            d2: df * self.d2,
            d12: df * self.d12 + ddf * self.d1 * self.d2,
        }
    }
}

impl Add for HyperDual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
            d12: self.d12 + o.d12,
        }
    }
}

impl Sub for HyperDual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            v: self.v - o.v,
            d1: self.d1 - o.d1,
            d2: self.d2 - o.d2,
            d12: self.d12 - o.d12,
        }
    }
}

impl Mul for HyperDual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + self.v * o.d2,
            d12: self.d12 * o.v + self.d1 * o.d2 + self.d2 * o.d1 + self.v * o.d12,
        }
    }
}

impl Div for HyperDual {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = o.v.recip();
        let recip = o.lift(inv, -inv * inv, 2.0 * inv * inv * inv);
        self * recip
    }
}

impl Neg for HyperDual {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            v: -self.v,
            d1: -self.d1,
            d2: -self.d2,
            d12: -self.d12,
        }
    }
}

impl Real for HyperDual {
    fn cst(v: f64) -> Self {
        Self {
            v,
            d1: 0.0,
            d2: 0.0,
            d12: 0.0,
        }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.lift(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.lift(c, -s, -c)
    }
    fn sinh(self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.lift(s, c, s)
    }
    fn cosh(self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.lift(c, s, c)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.lift(e, e, e)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.lift(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn asinh(self) -> Self {
        let q = 1.0 + self.v * self.v;
        let d = q.sqrt().recip();
        self.lift(self.v.asinh(), d, -self.v * d / q)
    }
}
