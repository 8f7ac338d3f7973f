//! The entire function `phi(s) = exp(s - 1 + exp(s - 2 + exp(s - 3 + ...)))`.
//!
//! It satisfies `phi(s + 1) = exp(s + phi(s))`. Real, complex and jet
//! evaluations all run through [`converge`](crate::comp::converge); the
//! guarded variant climbs from a plain landing interval with the functional
//! equation, so it never overflows.

use std::collections::HashMap;
use std::sync::RwLock;

use num_complex::Complex64;

use crate::comp::{self, CompPolicy, ConvergenceReport, ExpShiftFamily, Region};
use crate::error::{Error, Result};
use crate::guarded::{GuardedReal, OVERFLOW_GUARD};
use crate::jet::Jet;

/// Default evaluation tolerance.
pub const PHI_EPS: f64 = 1e-15;

/// Largest argument whose value stays plain (phi(3.4) ~ 5.7e34, phi(3.5)
/// is far above the guard).
pub const PLAIN_LIMIT: f64 = 3.0;

fn family(s: f64) -> ExpShiftFamily {
    ExpShiftFamily::new(Region::around(Complex64::new(s, 0.0)))
}

/// `phi(s)` with its truncation report.
pub fn phi_with_report(s: f64, eps: f64, policy: CompPolicy) -> Result<(f64, ConvergenceReport)> {
    let (v, rep) = comp::converge(&family(s), &s, 0.0, eps, policy).map_err(|_| Error::Overflow { x: s })?;
    if v.abs() >= OVERFLOW_GUARD {
        return Err(Error::Overflow { x: s });
    }
    Ok((v, rep))
}

/// `phi(s)` for real `s`. Fails with an overflow error once the value
/// passes the guard; use [`phi_log`] there.
pub fn phi(s: f64, eps: f64) -> Result<f64> {
    phi_with_report(s, eps, CompPolicy::default()).map(|(v, _)| v)
}

pub fn phi_complex(s: Complex64, eps: f64) -> Result<Complex64> {
    let (v, _) = comp::converge(&family(s.re), &s, Complex64::new(0.0, 0.0), eps, CompPolicy::default())
        .map_err(|_| Error::Overflow { x: s.re })?;
    if v.norm() >= OVERFLOW_GUARD {
        return Err(Error::Overflow { x: s.re });
    }
    Ok(v)
}

/// `phi` on a jet: Taylor coefficients of `phi` composed with `s`.
pub fn phi_jet(s: &Jet, eps: f64) -> Result<Jet> {
    let seed = Jet::constant(0.0, s.order());
    let (v, _) = comp::converge(&family(s.value()), s, seed, eps, CompPolicy::default()).map_err(|e| {
        if matches!(e, Error::InvalidArgument(_)) {
            e
        } else {
            Error::Overflow { x: s.value() }
        }
    })?;
    if v.value().abs() >= OVERFLOW_GUARD {
        return Err(Error::Overflow { x: s.value() });
    }
    Ok(v)
}

/// Overflow-safe `phi(t)` in level-index form.
pub fn phi_log(t: f64) -> GuardedReal {
    phi_log_from(t, PLAIN_LIMIT)
}

/// [`phi_log`] with a chosen landing interval `(top - 1, top]`: arguments
/// above `top` are shifted down into it, evaluated plainly, then climbed
/// back with `phi(s + 1) = exp(s + phi(s))`. `top` must not exceed
/// [`PLAIN_LIMIT`].
pub fn phi_log_from(t: f64, top: f64) -> GuardedReal {
    let top = top.min(PLAIN_LIMIT);
    let m = if t > top { (t - top).ceil() as u64 } else { 0 };
    let t0 = t - m as f64;
    let base = phi(t0, PHI_EPS).expect("phi is plain on the landing interval");
    let mut g = GuardedReal::from_plain(base).expect("finite");
    for i in 0..m {
        let s = t0 + i as f64;
        g = g
            .add_plain(s)
            .and_then(|x| x.exp())
            .expect("phi grows without bound but stays within level-index range");
    }
    g
}

/// Relative residual of the functional equation at `t`.
///
/// Plain `|phi(t+1) - exp(t + phi(t))| / max(1, |phi(t+1)|)` when both sides
/// fit; otherwise the same comparison one logarithm down,
/// `ln phi(t+1)` versus `t + phi(t)`, with the two sides landed on
/// different plain intervals.
pub fn phi_residual(t: f64) -> f64 {
    if let (Ok(a), Ok(b)) = (phi(t, PHI_EPS), phi(t + 1.0, PHI_EPS)) {
        let rhs = (t + a).exp();
        if rhs.is_finite() {
            return (b - rhs).abs() / b.abs().max(1.0);
        }
    }
    let lhs = phi_log(t + 1.0).ln();
    let rhs = phi_log_from(t, PLAIN_LIMIT - 1.0).add_plain(t);
    match (lhs, rhs) {
        (Ok(l), Ok(r)) => l.relative_gap(&r),
        _ => f64::INFINITY,
    }
}

/// Complex analogue of [`phi_residual`] (plain only).
pub fn phi_residual_complex(s: Complex64) -> Result<f64> {
    let a = phi_complex(s, PHI_EPS)?;
    let b = phi_complex(s + 1.0, PHI_EPS)?;
    Ok((b - (s + a).exp()).norm() / b.norm().max(1.0))
}

/// Default starting node count for [`cauchy_derivative`].
pub const CAUCHY_NODES: usize = 64;
const CAUCHY_NODE_CAP: usize = 4096;
const CAUCHY_AGREEMENT: f64 = 1e-9;

fn trapezoid(s0: Complex64, k: usize, radius: f64, nodes: usize) -> Result<Complex64> {
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 0..nodes {
        let theta = std::f64::consts::TAU * n as f64 / nodes as f64;
        let xi = s0 + Complex64::from_polar(radius, theta);
        let v = phi_complex(xi, PHI_EPS).map_err(|_| Error::Contour { re: xi.re, im: xi.im })?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Contour { re: xi.re, im: xi.im });
        }
        acc += v * Complex64::from_polar(1.0, -(k as f64) * theta);
    }
    Ok(acc * fact / (nodes as f64 * radius.powi(k as i32)))
}

/// `k`-th derivative of `phi` at `s0` by the trapezoid rule on the circle
/// of the given radius, starting from `nodes` samples and doubling until
/// two successive estimates agree to 1e-9 (relative to `max(1, |f|)`).
pub fn cauchy_derivative(s0: Complex64, k: usize, radius: f64, nodes: usize) -> Result<Complex64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("contour radius must be positive, got {radius}")));
    }
    let mut n = nodes.max(4);
    let mut prev = trapezoid(s0, k, radius, n)?;
    while n < CAUCHY_NODE_CAP {
        n *= 2;
        let cur = trapezoid(s0, k, radius, n)?;
        if (cur - prev).norm() <= CAUCHY_AGREEMENT * cur.norm().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Ok(prev)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Key {
    Real(u64),
    Complex(u64, u64),
    Guarded(u64),
}

#[derive(Clone, Copy, Debug)]
enum Cached {
    Real(f64),
    Complex(Complex64),
    Guarded(GuardedReal),
}

/// A caching front end for `phi`. Evaluation is deterministic, so
/// concurrent inserts of the same key store identical values.
pub struct PhiFunction {
    eps: f64,
    policy: CompPolicy,
    cache: RwLock<HashMap<Key, Cached>>,
}

impl PhiFunction {
    pub fn new(eps: f64, policy: CompPolicy) -> Self {
        PhiFunction { eps, policy, cache: RwLock::new(HashMap::new()) }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn lookup(&self, key: Key) -> Option<Cached> {
        self.cache.read().ok()?.get(&key).copied()
    }

    fn store(&self, key: Key, v: Cached) {
        if let Ok(mut c) = self.cache.write() {
            c.entry(key).or_insert(v);
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let key = Key::Real(t.to_bits());
        if let Some(Cached::Real(v)) = self.lookup(key) {
            return Ok(v);
        }
        let (v, _) = phi_with_report(t, self.eps, self.policy)?;
        self.store(key, Cached::Real(v));
        Ok(v)
    }

    pub fn eval_complex(&self, s: Complex64) -> Result<Complex64> {
        let key = Key::Complex(s.re.to_bits(), s.im.to_bits());
        if let Some(Cached::Complex(v)) = self.lookup(key) {
            return Ok(v);
        }
        let v = phi_complex(s, self.eps)?;
        self.store(key, Cached::Complex(v));
        Ok(v)
    }

    pub fn eval_guarded(&self, t: f64) -> GuardedReal {
        let key = Key::Guarded(t.to_bits());
        if let Some(Cached::Guarded(v)) = self.lookup(key) {
            return v;
        }
        let v = phi_log(t);
        self.store(key, Cached::Guarded(v));
        v
    }

    pub fn len(&self) -> usize {
        self.cache.read().map(|c| c.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for PhiFunction {
    fn default() -> Self {
        PhiFunction::new(PHI_EPS, CompPolicy::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // independent fixed-depth loop
    fn oracle(s: f64, depth: usize) -> f64 {
        let mut z = 0.0f64;
        for j in (1..=depth).rev() {
            z = (s - j as f64 + z).exp();
        }
        z
    }

    #[test]
    fn values_match_fixed_depth_loop() {
        for s in [-10.0, -2.0, 0.0, 0.5, 1.0, 2.0, 3.0] {
            let v = phi(s, PHI_EPS).unwrap();
            let o = oracle(s, 60);
            assert!((v - o).abs() <= 1e-13 * o.abs().max(1.0), "s={s}: {v} vs {o}");
        }
        assert!((phi(1.0, PHI_EPS).unwrap() - 1.5283191835596137).abs() < 1e-13);
        let small = phi(-10.0, PHI_EPS).unwrap();
        assert!(small > 0.0 && small < 2e-5);
    }

    #[test]
    fn functional_equation_spot_checks() {
        let a = phi(1.0, PHI_EPS).unwrap();
        let b = phi(2.0, PHI_EPS).unwrap();
        assert!((b - (1.0 + a).exp()).abs() <= 1e-12 * b);
        for t in [0.0, 1.0, -20.0] {
            assert!(phi_residual(t) < 1e-12, "t={t}");
        }
        for t in [2.5, 3.0, 4.0, 5.5] {
            assert!(phi_residual(t) < 1e-10, "t={t}: {}", phi_residual(t));
        }
    }

    #[test]
    fn overflow_points_to_guarded_path() {
        assert!(phi(4.0, PHI_EPS).unwrap_err().is_overflow());
        let g = phi_log(2.0);
        assert_eq!(g.level(), 0);
        assert!((g.residual() - 12.53).abs() < 0.01);
        let g4 = phi_log(4.0);
        assert_eq!(g4.level(), 1);
        let p3 = phi(3.0, PHI_EPS).unwrap();
        assert!((g4.residual() - (3.0 + p3)).abs() < 1e-9 * p3);
    }

    #[test]
    fn guarded_matches_plain_on_overlap() {
        for i in 0..=80 {
            let t = -5.0 + 0.1 * i as f64;
            let plain = phi(t, PHI_EPS).unwrap();
            let g = phi_log_from(t, 0.0).to_f64().unwrap();
            assert!((g - plain).abs() <= 1e-9 * plain.abs(), "t={t}");
        }
    }

    #[test]
    fn contour_derivatives() {
        let s0 = Complex64::new(0.3, 0.0);
        let d0 = cauchy_derivative(s0, 0, 1.0, CAUCHY_NODES).unwrap();
        assert!((d0.re - phi(0.3, PHI_EPS).unwrap()).abs() < 1e-10);
        let d1 = cauchy_derivative(Complex64::new(0.5, 0.0), 1, 1.0, CAUCHY_NODES).unwrap();
        let h = 1e-4;
        let fd = (phi(0.5 + h, PHI_EPS).unwrap() - phi(0.5 - h, PHI_EPS).unwrap()) / (2.0 * h);
        assert!((d1.re - fd).abs() < 1e-6 * fd.abs());
        assert!(cauchy_derivative(s0, 1, 0.0, 64).is_err());
    }

    #[test]
    fn jet_derivatives_match_contour() {
        let j = phi_jet(&Jet::variable(0.5, 3), PHI_EPS).unwrap();
        for k in 1..=3 {
            let c = cauchy_derivative(Complex64::new(0.5, 0.0), k, 1.0, CAUCHY_NODES).unwrap();
            assert!((j.derivative(k) - c.re).abs() < 1e-6 * c.re.abs(), "k={k}");
        }
    }

    #[test]
    fn cache_is_transparent() {
        let p = PhiFunction::default();
        let a = p.eval(0.7).unwrap();
        let b = p.eval(0.7).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(a, phi(0.7, PHI_EPS).unwrap());
        let z = Complex64::new(0.2, 0.4);
        assert_eq!(p.eval_complex(z).unwrap(), phi_complex(z, PHI_EPS).unwrap());
        assert_eq!(p.eval_guarded(5.0), phi_log(5.0));
        assert_eq!(p.len(), 3);
    }
}
