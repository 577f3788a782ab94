//! Scalar types shared by the exact and the numeric engines.
//!
//! [`Scalar`] covers both `f64` and exact rationals so the algebraic layer can be
//! written once. [`Real`] is the smaller set of transcendental operations needed
//! by closed-form profiles; it is implemented for `f64` and for the two
//! forward-mode jets used to differentiate those profiles exactly:
//! [`Jet2`] (value and first two derivatives in one variable) and [`Dual4`]
//! (value and the four first partials on the flat half-space).

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num};

/// Coefficient field for Lie-algebra and form arithmetic.
pub trait Scalar:
    Clone + PartialEq + Debug + Num + Neg<Output = Self> + FromPrimitive + Send + Sync
{
    fn int(n: i64) -> Self {
        Self::from_i64(n).expect("integer fits every scalar field")
    }

    fn half() -> Self {
        Self::one() / Self::int(2)
    }

    /// Lossy conversion used only for reporting.
    fn to_f64_lossy(&self) -> f64;
}

impl Scalar for f64 {
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn to_f64_lossy(&self) -> f64 {
        use num_traits::ToPrimitive;
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Exact rational from a small numerator and denominator.
pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Transcendental closure needed by the closed-form model profiles.
pub trait Real:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;
    fn exp(self) -> Self;
    fn exp_m1(self) -> Self;
    fn sqrt(self) -> Self;

    fn recip(self) -> Self {
        Self::cst(1.0) / self
    }

    fn sq(self) -> Self {
        self * self
    }

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
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn exp_m1(self) -> Self {
        f64::exp_m1(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

/// Truncated Taylor jet `v + d1·h + d2·h²/2` in a single variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet2 {
    pub fn cst(x: f64) -> Self {
        Self { v: x, d1: 0.0, d2: 0.0 }
    }

    pub fn var(x: f64) -> Self {
        Self {
            v: x,
            d1: 1.0,
            d2: 0.0,
        }
    }

    /// Applies a scalar function given its value and first two derivatives at `self.v`.
    fn chain(self, f: f64, df: f64, ddf: f64) -> Self {
        Self {
            v: f,
            d1: df * self.d1,
            d2: ddf * self.d1 * self.d1 + df * self.d2,
        }
    }
}

impl Add for Jet2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
        }
    }
}

impl Sub for Jet2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            v: self.v - o.v,
            d1: self.d1 - o.d1,
            d2: self.d2 - o.d2,
        }
    }
}

impl Mul for Jet2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

impl Div for Jet2 {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Neg for Jet2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            v: -self.v,
            d1: -self.d1,
            d2: -self.d2,
        }
    }
}

impl Real for Jet2 {
    fn cst(v: f64) -> Self {
        Self { v, d1: 0.0, d2: 0.0 }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn exp_m1(self) -> Self {
        let e = self.v.exp();
        self.chain(self.v.exp_m1(), e, e)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
}

/// First-order dual number carrying the partials along `(x1, x2, x3, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual4 {
    pub v: f64,
    pub d: [f64; 4],
}

impl Dual4 {
    /// The coordinate function number `axis` evaluated at `x`.
    pub fn coordinate(x: f64, axis: usize) -> Self {
        let mut d = [0.0; 4];
        d[axis] = 1.0;
        Self { v: x, d }
    }

    fn chain(self, f: f64, df: f64) -> Self {
        Self {
            v: f,
            d: self.d.map(|di| df * di),
        }
    }
}

impl Add for Dual4 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            d: std::array::from_fn(|i| self.d[i] + o.d[i]),
        }
    }
}

impl Sub for Dual4 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            v: self.v - o.v,
            d: std::array::from_fn(|i| self.d[i] - o.d[i]),
        }
    }
}

impl Mul for Dual4 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            d: std::array::from_fn(|i| self.d[i] * o.v + self.v * o.d[i]),
        }
    }
}

impl Div for Dual4 {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Neg for Dual4 {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            v: -self.v,
            d: self.d.map(|x| -x),
        }
    }
}

impl Real for Dual4 {
    fn cst(v: f64) -> Self {
        Self { v, d: [0.0; 4] }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn exp_m1(self) -> Self {
        self.chain(self.v.exp_m1(), self.v.exp())
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> (f64, f64) {
        let h = 1e-4;
        let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
        let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        (d1, d2)
    }

    #[test]
    fn jet_matches_finite_differences() {
        let g = |y: Jet2| (y.scale(2.0).exp() + Jet2::cst(1.0)) / y.exp_m1() + y.sqrt();
        let x = 0.7;
        let j = g(Jet2::var(x));
        let (d1, d2) = fd(|t| g(Jet2::cst(t)).v, x);
        assert!((j.d1 - d1).abs() < 1e-6 * (1.0 + d1.abs()));
        assert!((j.d2 - d2).abs() < 1e-4 * (1.0 + d2.abs()));
    }

    #[test]
    fn dual_partials() {
        let x = Dual4::coordinate(0.3, 0);
        let y = Dual4::coordinate(2.0, 3);
        let f = x * y / (x * x + y * y).sqrt();
        let r = (0.09f64 + 4.0).sqrt();
        assert!((f.d[0] - (2.0 / r - 0.3 * 2.0 * 0.3 / r.powi(3))).abs() < 1e-14);
        assert!((f.d[3] - (0.3 / r - 0.3 * 2.0 * 2.0 / r.powi(3))).abs() < 1e-14);
        assert_eq!(f.d[1], 0.0);
    }

    #[test]
    fn exact_half() {
        assert_eq!(BigRational::half() * BigRational::int(2), BigRational::int(1));
    }
}
