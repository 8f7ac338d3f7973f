//! The generic level machinery shared by every `k >= 2`.
//!
//! Notation: `E_j` is level `j`, `A_j` its inverse. Level `k` is assembled
//! from the auxiliary function `Φ_k(t) = Ω e^(t-j) E_(k-1)(x)` and the
//! correction `Λ(t) = lim A_(k-1)^n(Φ(t+n)) - Φ(t)`, evaluated on the window
//! `[T, T+1)` and walked to other arguments with `E_(k-1)` / `A_(k-1)`.

use std::f64::consts::E;

use crate::comp::ConvergenceReport;
use crate::error::{Error, Result};
use crate::guarded::{GuardedReal, OVERFLOW_GUARD};
use crate::jet::Jet;
use crate::root;
use crate::scalar::Scalar;

use super::{Origin, Tower};

/// Auxiliary values at or above this size take the shift-defect path in
/// the correction step; the neglected term is below `x / HUGE`.
pub(crate) const HUGE: f64 = 1e150;

/// Even levels refuse arguments this close to their domain edge.
pub const EDGE_GAP: f64 = 1e-8;

const PHI_TAIL: f64 = 42.0;
const ORIGIN_ORDER: usize = 12;
const ORIGIN_RADIUS_CAP: f64 = 0.05;
const ORIGIN_TOL: f64 = 1e-18;
const REDUCTION_CAP: usize = 100_000;
const INVERSE_XTOL: f64 = 1e-15;
const DIRECT_LIMIT: f64 = 16.0;

pub(crate) struct LambdaOutcome<S> {
    pub value: S,
    pub report: ConvergenceReport,
}

fn recip(g: &Option<GuardedReal>) -> f64 {
    g.as_ref().map_or(0.0, GuardedReal::recip_or_zero)
}

fn overflowish(e: &Error) -> bool {
    e.is_overflow() || matches!(e, Error::InvalidJet { .. })
}

impl Tower {
    /// `E_k(x)`, landing on the standard window.
    pub(crate) fn e<S: Scalar>(&self, k: usize, x: &S) -> Result<S> {
        self.e_shifted(k, x, 0)
    }

    /// `E_k(x)` with the landing window moved up by `extra` unit steps.
    pub(crate) fn e_shifted<S: Scalar>(&self, k: usize, x: &S, extra: u32) -> Result<S> {
        if k == 1 {
            return x.exp();
        }
        let p = self.params(k)?;
        self.check_domain(k, x.value())?;
        self.g_ext(k, &(*x + p.omega), extra)
    }

    pub(crate) fn check_domain(&self, k: usize, t: f64) -> Result<()> {
        if k.is_multiple_of(2) {
            let alpha = self.params(k)?.alpha.unwrap_or(f64::NEG_INFINITY);
            if !(t > alpha + EDGE_GAP) {
                return Err(Error::OutsideDomain { k, t, alpha });
            }
        }
        if t.is_nan() {
            return Err(Error::InvalidArgument("NaN argument".into()));
        }
        Ok(())
    }

    /// The window function `Φ + Λ` extended by the functional equation.
    pub(crate) fn g_ext<S: Scalar>(&self, k: usize, u: &S, extra: u32) -> Result<S> {
        let window = self.state(k)?.params.window_t + extra as f64;
        let shift = (u.value() - window).floor();
        if shift.is_nan() {
            return Err(Error::InvalidArgument("NaN argument".into()));
        }
        if shift > 1e9 {
            return Err(Error::Overflow { x: u.value() });
        }
        // far below the window the downward walk settles on the fixed point
        let m = shift.max(-(REDUCTION_CAP as f64)) as i64;
        let v = *u - m as f64;
        let mut val = self.core(k, &v)?;
        if m > 0 {
            for _ in 0..m {
                val = self.e(k - 1, &val)?;
            }
        } else {
            for _ in 0..(-m) {
                let next = self.a(k - 1, &val)?;
                let settled = next.distance(&val) <= 1e-16 * val.value().abs().max(1.0);
                val = next;
                if settled {
                    break;
                }
            }
        }
        Ok(val)
    }

    /// `Φ_k(v) + Λ(v)` for `v` on or above the window.
    pub(crate) fn core<S: Scalar>(&self, k: usize, v: &S) -> Result<S> {
        let phi = self.big_phi(k, v)?;
        let lam = self.lambda(k, v, v.order() > 0)?;
        let out = phi + lam.value;
        if !out.is_finite() {
            return Err(Error::Overflow { x: v.value() });
        }
        Ok(out)
    }

    /// `E_j` near 0, using the cached origin expansion when it is accurate.
    fn e_near<S: Scalar>(&self, j: usize, x: &S) -> Result<S> {
        if j == 1 {
            return x.exp();
        }
        if let Some(o) = self.origin(j) {
            let x0 = x.value().abs();
            let reach = ORIGIN_ORDER + 1 - x.order().min(ORIGIN_ORDER);
            if x0 <= o.radius && o.scale * x0.powi(reach as i32) < ORIGIN_TOL {
                return Ok(x.horner(&o.coeffs));
            }
        }
        self.e(j, x)
    }

    pub(crate) fn compute_origin(&self, j: usize) -> Option<Origin> {
        let jet = self.e(j, &Jet::variable(0.0, ORIGIN_ORDER)).ok()?;
        let coeffs = jet.coeffs().to_vec();
        let scale = coeffs[ORIGIN_ORDER - 1..].iter().fold(1.0f64, |m, c| m.max(c.abs()));
        let radius = (ORIGIN_TOL / scale).powf(1.0 / ORIGIN_ORDER as f64).min(ORIGIN_RADIUS_CAP);
        Some(Origin { coeffs, radius, scale })
    }

    /// `Φ_k(t) = e^(t-1) E_(k-1)(e^(t-2) E_(k-1)(...))`, seeded at 0.
    pub(crate) fn big_phi<S: Scalar>(&self, k: usize, t: &S) -> Result<S> {
        let depth = (t.value() + PHI_TAIL).ceil().max(1.0) as usize;
        let mut x = t.constant_like(0.0);
        for j in (1..=depth).rev() {
            let c = (*t - j as f64).exp()?;
            let ex = self.e_near(k - 1, &x).map_err(|e| e.at_step(j))?;
            x = c * ex;
            if !x.is_finite() {
                return Err(Error::Overflow { x: t.value() });
            }
        }
        Ok(x)
    }

    /// `Φ_k(t)` in level-index form, climbing with
    /// `Φ(t) = e^(t-1) E_(k-1)(Φ(t-1))` once plain evaluation overflows.
    pub(crate) fn big_phi_guarded(&self, k: usize, t: f64) -> Result<GuardedReal> {
        match self.big_phi(k, &t) {
            Ok(v) if v.abs() < OVERFLOW_GUARD => GuardedReal::from_plain(v),
            Ok(_) => self.big_phi_climb(k, t),
            Err(e) if overflowish(&e) => self.big_phi_climb(k, t),
            Err(e) => Err(e),
        }
    }

    /// `Φ_k(t)` in level-index form, `None` when even that is out of range.
    fn big_phi_beyond(&self, k: usize, t: f64) -> Result<Option<GuardedReal>> {
        match self.big_phi_guarded(k, t) {
            Ok(g) => Ok(Some(g)),
            Err(Error::Unrepresentable) => Ok(None),
            Err(e) if matches!(e, Error::Step { .. }) && e.is_overflow() => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn big_phi_climb(&self, k: usize, t: f64) -> Result<GuardedReal> {
        let below = self.big_phi_guarded(k, t - 1.0)?;
        self.e_guarded(k - 1, &below)?.mul_exp(t - 1.0)
    }

    /// `E_j` applied to a level-index value.
    pub(crate) fn e_guarded(&self, j: usize, g: &GuardedReal) -> Result<GuardedReal> {
        if j == 1 {
            return g.exp();
        }
        match g.to_f64() {
            Some(x) => self.eval_guarded(j, x),
            None => Err(Error::Unrepresentable),
        }
    }

    /// `E_k(t)` with level-index output; upward steps never overflow until
    /// the level count itself is out of range.
    pub(crate) fn eval_guarded(&self, k: usize, t: f64) -> Result<GuardedReal> {
        if k == 1 {
            return GuardedReal::from_plain(t)?.exp();
        }
        let p = self.params(k)?;
        self.check_domain(k, t)?;
        let u = t + p.omega;
        let m = (u - p.window_t).floor();
        if m <= 0.0 {
            return GuardedReal::from_plain(self.g_ext(k, &u, 0)?);
        }
        if m > 1e18 {
            return Err(Error::Unrepresentable);
        }
        let m = m as u64;
        let mut g = GuardedReal::from_plain(self.core(k, &(u - m as f64))?)?;
        if k == 2 {
            return g.exp_n(m);
        }
        for _ in 0..m {
            g = self.e_guarded(k - 1, &g)?;
        }
        Ok(g)
    }

    /// The correction `Λ(t)` for level `k`.
    ///
    /// The depth `n` is the first with `|t+n| prod_(i<=n) 1/Φ(t+i) < eps`
    /// (huge Φ contribute exactly 0); the value returned is `Λ_(n+1)`.
    /// With `strict` set the per-coefficient successive difference must
    /// also fall below `eps`, deepening `n` until it does.
    pub(crate) fn lambda<S: Scalar>(&self, k: usize, t: &S, strict: bool) -> Result<LambdaOutcome<S>> {
        let eps = self.config.tolerance;
        let t0 = t.value();
        let mut g = vec![self.big_phi_beyond(k, t0)?];
        let mut prod = 1.0;
        let mut n = 0;
        let mut bound;
        loop {
            n += 1;
            g.push(self.big_phi_beyond(k, t0 + n as f64)?);
            prod *= recip(&g[n]);
            bound = prod * (t0 + n as f64).abs();
            if bound < eps || n >= self.config.depth_cap {
                break;
            }
        }
        let mut phis: Vec<Option<S>> = Vec::new();
        loop {
            g.push(self.big_phi_beyond(k, t0 + (n + 1) as f64)?);
            while phis.len() < g.len() {
                let i = phis.len();
                phis.push(self.phi_slot(k, t, i as f64, &g[i])?);
            }
            let hi = self.unroll(k, t, n + 1, &phis)?;
            if !strict && bound < eps {
                let report = ConvergenceReport { depth_used: n + 1, last_delta: bound, tail_bound: bound, converged: true };
                return Ok(LambdaOutcome { value: hi, report });
            }
            let lo = self.unroll(k, t, n, &phis)?;
            let delta = hi.distance(&lo) / hi.magnitude().max(1.0);
            let converged = bound < eps && delta < eps;
            if converged || n + 1 >= self.config.depth_cap {
                let report = ConvergenceReport { depth_used: n + 1, last_delta: delta, tail_bound: bound, converged };
                return Ok(LambdaOutcome { value: hi, report });
            }
            n += 1;
            prod *= recip(&g[n]);
            bound = prod * (t0 + n as f64).abs();
        }
    }

    /// `Λ_n(t)` by the one-step recursion unrolled inside-out from
    /// `Λ_0 = 0`. `phis[i]` is `Φ(t+i)` when below [`HUGE`].
    fn unroll<S: Scalar>(&self, k: usize, t: &S, n: usize, phis: &[Option<S>]) -> Result<S> {
        let mut x = t.constant_like(0.0);
        for i in (0..n).rev() {
            x = self.step(k, t, i, &x, phis).map_err(|e| e.at_step(i + 1))?;
        }
        Ok(x)
    }

    /// One correction step at `t + i`:
    /// `A_(k-1)(Φ(t+i+1) + x) - Φ(t+i)`, with `Φ(t+i+1) = e^(t+i) E_(k-1)(Φ(t+i))`.
    /// Jets always take the defect form; the direct difference of two large
    /// jets loses the higher coefficients to cancellation.
    fn step<S: Scalar>(&self, k: usize, t: &S, i: usize, x: &S, phis: &[Option<S>]) -> Result<S> {
        match (&phis[i + 1], &phis[i]) {
            (Some(p1), Some(p0)) if t.order() == 0 => Ok(self.a(k - 1, &(*p1 + *x))? - *p0),
            (_, p0) => self.defect(k - 1, &(*t + i as f64), x, p0.as_ref()),
        }
    }

    /// `G_j(ln c, s, P) = A_j(c E_j(P) + s) - P`, evaluated without forming
    /// large intermediates. `G_1 = ln c + ln(1 + s e^(-ln c - P))`; for
    /// `j >= 2`, `G_j(ln c, s, P) = G_j(0, G_(j-1)(ln c, s, Q), P - 1)` with
    /// `Q = E_j(P - 1)`, until `E_j(P)` is small enough to subtract directly.
    /// Once `Q` is huge the defect is below resolution and taken as 0.
    /// `p = None` stands for a `P` above [`HUGE`].
    fn defect<S: Scalar>(&self, j: usize, log_c: &S, s: &S, p: Option<&S>) -> Result<S> {
        let zero = log_c.constant_like(0.0);
        if j == 1 {
            let Some(p) = p else { return Ok(*log_c) };
            let w = -(*log_c + *p);
            if w.value() < -700.0 {
                return Ok(*log_c);
            }
            return Ok(*log_c + (*s * w.exp()?).ln_1p()?);
        }
        let Some(p) = p else { return Ok(zero) };
        let direct = match self.e(j, p) {
            Ok(v) if v.value().abs() <= DIRECT_LIMIT => Some(v),
            Ok(_) => None,
            Err(e) if overflowish(&e) => None,
            Err(e) => return Err(e),
        };
        if let Some(v) = direct {
            return Ok(self.a(j, &(v * log_c.exp()? + *s))? - *p);
        }
        let pm1 = *p - 1.0;
        let q = match self.e(j, &pm1) {
            Ok(q) if q.value() < HUGE => q,
            Ok(_) => return Ok(zero),
            Err(e) if overflowish(&e) => return Ok(zero),
            Err(e) => return Err(e),
        };
        let inner = self.defect(j - 1, log_c, s, Some(&q))?;
        self.defect(j, &zero, &inner, Some(&pm1))
    }

    /// `A_j(y)` on scalars: the plain inverse, lifted to jets by series
    /// reversion of `E_j` about the root.
    pub(crate) fn a<S: Scalar>(&self, j: usize, y: &S) -> Result<S> {
        if j == 1 {
            if !(y.value() > 0.0) {
                return Err(Error::OutsideRange { k: 1, x: y.value(), alpha: 0.0 });
            }
            return y.ln();
        }
        let x0 = self.a_f64(j, y.value())?;
        y.apply_local(x0, |order| self.e(j, &Jet::variable(x0, order))?.revert(x0))
    }

    /// `A_j(y)` for plain `y`: Abel reduction into `[0, e]`, where the root
    /// lies in `[-1, 1]`, then a bracketed root find.
    pub(crate) fn a_f64(&self, j: usize, y: f64) -> Result<f64> {
        if j == 1 {
            return if y > 0.0 {
                Ok(y.ln())
            } else {
                Err(Error::OutsideRange { k: 1, x: y, alpha: 0.0 })
            };
        }
        let p = self.params(j)?;
        if j % 2 == 1 {
            let alpha = p.alpha.unwrap_or(f64::NEG_INFINITY);
            if !(y > alpha) {
                return Err(Error::OutsideRange { k: j, x: y, alpha });
            }
        }
        if y.is_nan() {
            return Err(Error::InvalidArgument("NaN argument".into()));
        }
        let mut y = y;
        let mut count = 0i64;
        while y > E {
            y = self.a_f64(j - 1, y)?;
            count += 1;
        }
        let mut guard = 0;
        while y < 0.0 {
            y = self.e(j - 1, &y)?;
            count -= 1;
            guard += 1;
            if guard > REDUCTION_CAP {
                return Err(Error::Root(format!("no reduction of {y} into [0, e] for level {j}")));
            }
        }
        let x = self.solve_core(j, y)?;
        Ok(x + count as f64)
    }

    /// Root of `E_j(x) = y` for `y` in `[0, e]`; `E_j(-1) = 0`, `E_j(1) = e`.
    fn solve_core(&self, j: usize, y: f64) -> Result<f64> {
        if y == 0.0 {
            return Ok(-1.0);
        }
        let f = |x: f64| match self.e(j, &x) {
            Ok(v) => Ok(v),
            Err(e) if overflowish(&e) => Ok(f64::INFINITY),
            Err(e) if e.is_domain() => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        };
        root::solve_increasing(f, y, -1.0, 1.0, INVERSE_XTOL)
    }

    /// `A_j` applied to a level-index value.
    pub(crate) fn a_guarded(&self, j: usize, g: &GuardedReal) -> Result<GuardedReal> {
        if j == 1 {
            return if g.is_plain() {
                GuardedReal::from_plain(self.a_f64(1, g.residual())?)
            } else {
                g.ln()
            };
        }
        let mut g = *g;
        let mut count = 0i64;
        while !g.is_plain() {
            g = self.a_guarded(j - 1, &g)?;
            count += 1;
        }
        GuardedReal::from_plain(self.a_f64(j, g.residual())? + count as f64)
    }

    /// `A'_(k-1)(Φ_k(t+1))`: the contraction factor of one correction step
    /// at `x = 0`. Huge auxiliary values give 0.
    pub(crate) fn step_contraction(&self, k: usize, t: f64) -> Result<f64> {
        let g = self.big_phi_beyond(k, t + 1.0)?;
        match g.and_then(|g| g.to_f64()) {
            Some(v) if v < HUGE => Ok(self.a(k - 1, &Jet::variable(v, 1))?.coeff(1).abs()),
            _ => Ok(0.0),
        }
    }

    /// One correction step at `t` applied to an arbitrary input `x`
    /// standing for `Λ(t+1)`.
    pub(crate) fn correction_step<S: Scalar>(&self, k: usize, t: &S, x: &S) -> Result<S> {
        let mut phis = Vec::with_capacity(2);
        for i in 0..2 {
            let g = self.big_phi_beyond(k, t.value() + i as f64)?;
            phis.push(self.phi_slot(k, t, i as f64, &g)?);
        }
        self.step(k, t, 0, x, &phis)
    }

    /// `Φ(t + i)` as a scalar when below [`HUGE`]; plain values reuse the
    /// guarded evaluation.
    fn phi_slot<S: Scalar>(&self, k: usize, t: &S, i: f64, g: &Option<GuardedReal>) -> Result<Option<S>> {
        match g.and_then(|g| g.to_f64()) {
            Some(v) if v < HUGE && t.order() == 0 => Ok(Some(t.constant_like(v))),
            Some(v) if v < HUGE => Ok(Some(self.big_phi(k, &(*t + i))?)),
            _ => Ok(None),
        }
    }
}
