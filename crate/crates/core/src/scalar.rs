//! Arithmetic abstractions shared by the composition engine and the tower.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jet::Jet;

/// What the composition engine needs to measure convergence.
pub trait Numeric: Clone + Debug {
    /// Distance between two values; for jets the largest coefficient gap.
    fn distance(&self, other: &Self) -> f64;
    /// Size used to scale tolerances.
    fn magnitude(&self) -> f64;
    fn is_finite(&self) -> bool;
}

impl Numeric for f64 {
    fn distance(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl Numeric for Complex64 {
    fn distance(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl Numeric for Jet {
    fn distance(&self, other: &Self) -> f64 {
        self.max_coeff_distance(other)
    }
    fn magnitude(&self) -> f64 {
        self.coeffs().iter().fold(0.0, |m, c| m.max(c.abs()))
    }
    fn is_finite(&self) -> bool {
        Jet::is_finite(self)
    }
}

/// A real scalar the tower recursions can run on: plain `f64`, or a [`Jet`]
/// carrying derivatives alongside the value.
pub trait Scalar:
    Numeric
    + Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn value(&self) -> f64;
    /// A constant of the same shape (jet order) as `self`.
    fn constant_like(&self, v: f64) -> Self;
    fn order(&self) -> usize;
    /// Taylor coefficients; a plain value is its own single coefficient.
    fn coefficients(&self) -> Vec<f64>;
    fn exp(&self) -> Result<Self>;
    fn ln(&self) -> Result<Self>;
    fn ln_1p(&self) -> Result<Self>;
    fn div(&self, other: &Self) -> Result<Self>;

    /// Applies a map known only through its value `fx = f(self.value())`
    /// and, for jets, its local expansion about `self.value()` (supplied
    /// lazily at the requested order).
    fn apply_local<F>(&self, fx: f64, local: F) -> Result<Self>
    where
        F: FnOnce(usize) -> Result<Jet>;

    /// Evaluates the polynomial `sum c_l x^l` at `self`.
    fn horner(&self, coeffs: &[f64]) -> Self {
        let mut acc = self.constant_like(*coeffs.last().unwrap_or(&0.0));
        for c in coeffs.iter().rev().skip(1) {
            acc = acc * *self + *c;
        }
        acc
    }
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn constant_like(&self, v: f64) -> Self {
        v
    }
    fn order(&self) -> usize {
        0
    }
    fn coefficients(&self) -> Vec<f64> {
        vec![*self]
    }
    fn exp(&self) -> Result<Self> {
        let v = f64::exp(*self);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow { x: *self })
        }
    }
    fn ln(&self) -> Result<Self> {
        if *self > 0.0 {
            Ok(f64::ln(*self))
        } else {
            Err(Error::Domain { op: "ln", x: *self })
        }
    }
    fn ln_1p(&self) -> Result<Self> {
        if *self > -1.0 {
            Ok(f64::ln_1p(*self))
        } else {
            Err(Error::Domain { op: "ln_1p", x: *self })
        }
    }
    fn div(&self, other: &Self) -> Result<Self> {
        if *other == 0.0 {
            return Err(Error::Domain { op: "div", x: *other });
        }
        let q = self / other;
        if q.is_finite() {
            Ok(q)
        } else {
            Err(Error::Overflow { x: *self })
        }
    }
    fn apply_local<F>(&self, fx: f64, _local: F) -> Result<Self>
    where
        F: FnOnce(usize) -> Result<Jet>,
    {
        Ok(fx)
    }
}

impl Scalar for Jet {
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn constant_like(&self, v: f64) -> Self {
        Jet::constant(v, self.order())
    }
    fn order(&self) -> usize {
        Jet::order(self)
    }
    fn coefficients(&self) -> Vec<f64> {
        self.coeffs().to_vec()
    }
    fn exp(&self) -> Result<Self> {
        Jet::exp(self)
    }
    fn ln(&self) -> Result<Self> {
        Jet::ln(self)
    }
    fn ln_1p(&self) -> Result<Self> {
        Jet::ln_1p(self)
    }
    fn div(&self, other: &Self) -> Result<Self> {
        Jet::div(self, other)
    }
    fn apply_local<F>(&self, _fx: f64, local: F) -> Result<Self>
    where
        F: FnOnce(usize) -> Result<Jet>,
    {
        let l = local(Jet::order(self))?;
        if l.order() != Jet::order(self) {
            return Err(Error::OrderMismatch(l.order(), Jet::order(self)));
        }
        l.compose(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_overflow_and_domain() {
        assert!(Scalar::exp(&800.0f64).unwrap_err().is_overflow());
        assert!(Scalar::ln(&0.0f64).unwrap_err().is_domain());
        assert!(Scalar::ln_1p(&-1.0f64).unwrap_err().is_domain());
    }

    #[test]
    fn horner_matches_direct() {
        let c = [1.0, -2.0, 0.5, 3.0];
        let x = 0.7f64;
        let direct = 1.0 - 2.0 * x + 0.5 * x * x + 3.0 * x * x * x;
        assert!((x.horner(&c) - direct).abs() < 1e-15);
        let j = Jet::variable(x, 2).horner(&c);
        assert!((j.value() - direct).abs() < 1e-15);
        assert!((j.derivative(1) - (-2.0 + x + 9.0 * x * x)).abs() < 1e-14);
    }

    #[test]
    fn apply_local_uses_expansion_for_jets() {
        let a = Jet::from_coeffs(&[0.5, 1.7, 0.2]).unwrap();
        let out = a
            .apply_local(0.5f64.exp(), |n| Jet::variable(0.5, n).exp())
            .unwrap();
        let direct = a.exp().unwrap();
        assert!(out.max_coeff_distance(&direct) < 1e-14);
        assert_eq!(0.5f64.apply_local(9.0, |_| unreachable!()).unwrap(), 9.0);
    }
}
