//! Truncated univariate Taylor arithmetic.
//!
//! A [`Jet`] of order `L` stores the Taylor-normalized coefficients
//! `c_l = f^(l)(t0) / l!` for `l = 0..=L`. Every evaluation routine in the
//! crate is generic over [`Scalar`](crate::Scalar), so running it on a jet
//! instead of an `f64` yields derivatives alongside the value.
//!
//! Addition, subtraction and multiplication go through the `std::ops`
//! traits; the transcendental operations and division are fallible and
//! refuse to hand back a jet with non-finite coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Largest supported jet order.
pub const MAX_ORDER: usize = 12;

/// Default order used by the tower and the command line.
pub const DEFAULT_ORDER: usize = 6;

const CAP: usize = MAX_ORDER + 1;

#[derive(Clone, Copy, PartialEq)]
pub struct Jet {
    order: usize,
    c: [f64; CAP],
}

impl Jet {
    /// The constant function `value` at the given order.
    pub fn constant(value: f64, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut c = [0.0; CAP];
        c[0] = value;
        Jet { order, c }
    }

    /// The identity function expanded at `t0`: coefficients `(t0, 1, 0, ...)`.
    pub fn variable(t0: f64, order: usize) -> Self {
        let mut j = Self::constant(t0, order);
        if order >= 1 {
            j.c[1] = 1.0;
        }
        j
    }

    /// Builds a jet from Taylor-normalized coefficients; the order is
    /// `coeffs.len() - 1`.
    pub fn from_coeffs(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("a jet needs at least one coefficient".into()));
        }
        let order = coeffs.len() - 1;
        if order > MAX_ORDER {
            return Err(Error::OrderTooLarge(order));
        }
        let mut c = [0.0; CAP];
        c[..coeffs.len()].copy_from_slice(coeffs);
        Jet { order, c }.checked("from_coeffs")
    }

    /// Builds a jet from raw derivatives `f^(l)(t0)`.
    pub fn from_derivatives(derivs: &[f64]) -> Result<Self> {
        let mut fact = 1.0;
        let coeffs: Vec<f64> = derivs
            .iter()
            .enumerate()
            .map(|(l, d)| {
                if l > 0 {
                    fact *= l as f64;
                }
                d / fact
            })
            .collect();
        Self::from_coeffs(&coeffs)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..=self.order]
    }

    pub fn coeff(&self, l: usize) -> f64 {
        if l <= self.order {
            self.c[l]
        } else {
            0.0
        }
    }

    /// The `l`-th derivative, `l! * c_l`.
    pub fn derivative(&self, l: usize) -> f64 {
        let fact: f64 = (1..=l).map(|i| i as f64).product();
        self.coeff(l) * fact
    }

    /// Projection onto a lower order, dropping higher coefficients.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        let mut c = [0.0; CAP];
        c[..=order].copy_from_slice(&self.c[..=order]);
        Jet { order, c }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs().iter().all(|c| c.is_finite())
    }

    /// Largest absolute coefficient difference (orders must agree).
    pub fn max_coeff_distance(&self, other: &Jet) -> f64 {
        let n = self.order.max(other.order);
        (0..=n)
            .map(|l| (self.coeff(l) - other.coeff(l)).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn checked(self, op: &'static str) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::InvalidJet { op })
        }
    }

    fn same_order(&self, other: &Jet) -> Result<usize> {
        if self.order == other.order {
            Ok(self.order)
        } else {
            Err(Error::OrderMismatch(self.order, other.order))
        }
    }

    fn zeros(order: usize) -> Self {
        Jet { order, c: [0.0; CAP] }
    }

    pub fn scale(&self, k: f64) -> Self {
        let mut out = *self;
        out.c[..=self.order].iter_mut().for_each(|c| *c *= k);
        out
    }

    /// Checked sum; errors on order mismatch or non-finite output.
    pub fn try_add(&self, other: &Jet) -> Result<Jet> {
        self.same_order(other)?;
        (*self + *other).checked("add")
    }

    /// Checked Cauchy product.
    pub fn try_mul(&self, other: &Jet) -> Result<Jet> {
        self.same_order(other)?;
        (*self * *other).checked("mul")
    }

    /// Quotient by the division recurrence `q_n = (a_n - sum b_i q_(n-i)) / b_0`.
    pub fn div(&self, other: &Jet) -> Result<Jet> {
        let n = self.same_order(other)?;
        let b0 = other.c[0];
        if b0 == 0.0 {
            return Err(Error::SingularJet);
        }
        let mut q = Jet::zeros(n);
        for k in 0..=n {
            let mut acc = self.c[k];
            for i in 1..=k {
                acc -= other.c[i] * q.c[k - i];
            }
            q.c[k] = acc / b0;
        }
        q.checked("div")
    }

    pub fn recip(&self) -> Result<Jet> {
        Jet::constant(1.0, self.order).div(self)
    }

    pub fn exp(&self) -> Result<Jet> {
        let n = self.order;
        let mut e = Jet::zeros(n);
        e.c[0] = self.c[0].exp();
        for k in 1..=n {
            let mut acc = 0.0;
            for i in 1..=k {
                acc += i as f64 * self.c[i] * e.c[k - i];
            }
            e.c[k] = acc / k as f64;
        }
        e.checked("exp")
    }

    pub fn ln(&self) -> Result<Jet> {
        let a0 = self.c[0];
        if !(a0 > 0.0) {
            return Err(Error::Domain { op: "ln", x: a0 });
        }
        self.log_series(a0.ln(), a0)
    }

    /// `ln(1 + a)`, accurate when the constant term is small.
    pub fn ln_1p(&self) -> Result<Jet> {
        let a0 = self.c[0];
        if !(a0 > -1.0) {
            return Err(Error::Domain { op: "ln_1p", x: a0 });
        }
        self.log_series(a0.ln_1p(), 1.0 + a0)
    }

    // l = ln(b) with b = base + (self - c0); l_n = (a_n - (1/n) sum_{k<n} k l_k a_(n-k)) / b0
    fn log_series(&self, l0: f64, b0: f64) -> Result<Jet> {
        let n = self.order;
        let mut l = Jet::zeros(n);
        l.c[0] = l0;
        for k in 1..=n {
            let mut acc = 0.0;
            for i in 1..k {
                acc += i as f64 * l.c[i] * self.c[k - i];
            }
            l.c[k] = (self.c[k] - acc / k as f64) / b0;
        }
        l.checked("ln")
    }

    /// Evaluates `self`, read as the local expansion of some map `f` about
    /// `a.value()`, at the jet `a`: Horner's scheme on `a - a.value()`.
    pub fn compose(&self, a: &Jet) -> Result<Jet> {
        let n = a.order;
        let mut delta = *a;
        delta.c[0] = 0.0;
        let top = self.order.min(n);
        let mut acc = Jet::constant(self.c[top], n);
        for l in (0..top).rev() {
            acc = acc * delta;
            acc.c[0] += self.c[l];
        }
        acc.checked("compose")
    }

    /// Local expansion of the inverse map. `self` is the expansion of `f`
    /// about `x0` (so `self.value() = f(x0)`); the result `g` satisfies
    /// `f(x0 + (g - x0)) = f(x0) + delta` to the jet's order, with
    /// `g.value() = x0`.
    pub fn revert(&self, x0: f64) -> Result<Jet> {
        let n = self.order;
        let f1 = self.coeff(1);
        if n == 0 {
            return Ok(Jet::constant(x0, 0));
        }
        if f1 == 0.0 || !f1.is_finite() {
            return Err(Error::SingularJet);
        }
        // g holds the deviation series (g_0 = 0); solve coefficient by
        // coefficient so that f(x0 + g) - f(x0) = delta.
        let mut g = Jet::zeros(n);
        g.c[1] = 1.0 / f1;
        let mut local = *self;
        local.c[0] = 0.0;
        for k in 2..=n {
            let mut probe = Jet::zeros(n);
            probe.c[1..k].copy_from_slice(&g.c[1..k]);
            let composed = local.compose(&probe)?;
            g.c[k] = -composed.c[k] / f1;
        }
        g.c[0] = x0;
        g.checked("revert")
    }
}

/// Composes a map given as a jet-valued evaluator with a jet argument. The
/// evaluator is called once at `a.value()` with an identity jet; its local
/// expansion is then pushed through `a` by [`Jet::compose`].
pub fn compose_scalar<F>(f: F, a: &Jet) -> Result<Jet>
where
    F: FnOnce(&Jet) -> Result<Jet>,
{
    let local = f(&Jet::variable(a.value(), a.order()))?;
    if local.order() != a.order() {
        return Err(Error::OrderMismatch(local.order(), a.order()));
    }
    local.compose(a)
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet{}", crate::error::Display(self.coeffs()))
    }
}

impl fmt::Display for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        crate::error::Display(self.coeffs()).fmt(f)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        debug_assert_eq!(self.order, rhs.order);
        for l in 0..=self.order {
            self.c[l] += rhs.c[l];
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: Jet) -> Jet {
        debug_assert_eq!(self.order, rhs.order);
        for l in 0..=self.order {
            self.c[l] -= rhs.c[l];
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        debug_assert_eq!(self.order, rhs.order);
        let n = self.order;
        let mut out = Jet::zeros(n);
        for i in 0..=n {
            let a = self.c[i];
            if a == 0.0 {
                continue;
            }
            for j in 0..=(n - i) {
                out.c[i + j] += a * rhs.c[j];
            }
        }
        out
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}
