//! Tetration `𝓕(t) = e↑↑t` from `phi` and the correction `τ`.
//!
//! `τ_0 = 0`, `τ_1(s) = s`, `τ_(n+1)(s) = s + ln(1 + τ_n(s+1)/φ(s+1))`;
//! `F̃ = φ + τ` solves `exp F̃(s) = F̃(s+1)` on the window, and
//! `𝓕(t) = F̃(t + ω)` with `ω` fixed by `𝓕(0) = 1`.

use std::f64::consts::E;

use crate::comp::ConvergenceReport;
use crate::error::{Error, Result};
use crate::guarded::GuardedReal;
use crate::jet::Jet;
use crate::phi::{self, PhiFunction, PHI_EPS};
use crate::root;
use crate::scalar::Scalar;

use super::engine::{EDGE_GAP, HUGE};
use super::{CorrectionKind, CorrectionSequence, DEFAULT_TOLERANCE};

/// Scalars `phi` can be evaluated on.
pub trait PhiArg: Scalar {
    fn phi(&self) -> Result<Self>;
}

impl PhiArg for f64 {
    fn phi(&self) -> Result<Self> {
        phi::phi(*self, PHI_EPS)
    }
}

impl PhiArg for Jet {
    fn phi(&self) -> Result<Self> {
        phi::phi_jet(self, PHI_EPS)
    }
}

const WINDOW_STEPS: usize = 20;
const SHIFT_CAP: usize = 60;
const DEPTH_CAP: usize = 256;
const DOMAIN_EDGE: f64 = -2.0;

/// A normalized tetration built on the `τ` correction.
pub struct Tetration {
    omega: f64,
    window_t: f64,
    tolerance: f64,
    phi: PhiFunction,
}

impl Tetration {
    /// Chooses the window and solves for `ω`.
    pub fn new(tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance < 1.0) {
            return Err(Error::InvalidArgument(format!("tolerance must lie in (0, 1), got {tolerance}")));
        }
        let mut t = Tetration { omega: f64::NAN, window_t: 0.0, tolerance, phi: PhiFunction::default() };
        t.window_t = t.find_window()?;
        t.omega = t.normalize()?;
        Ok(t)
    }

    /// Rebuilds from a known `ω` and window, or corrupts one on purpose.
    pub fn with_constants(omega: f64, window_t: f64, tolerance: f64) -> Self {
        Tetration { omega, window_t, tolerance, phi: PhiFunction::default() }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn window_t(&self) -> f64 {
        self.window_t
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Smallest half-integer `T >= 0` with `φ(T+1) >= 2` and step
    /// contraction `1/φ(t+1) <= 1/2` on `[T, T+2]`.
    fn find_window(&self) -> Result<f64> {
        'next: for i in 0..=WINDOW_STEPS {
            let t = 0.5 * i as f64;
            if self.phi.eval_guarded(t + 1.0).to_f64().is_some_and(|v| v < 2.0) {
                continue;
            }
            for s in 0..=4 {
                if self.contraction(t + 0.5 * s as f64) > 0.5 {
                    continue 'next;
                }
            }
            return Ok(t);
        }
        Err(Error::Construction { k: 2, reason: "no contracting window".into() })
    }

    /// Contraction factor of one `τ` step at `t`: `1/φ(t+1)`.
    pub fn contraction(&self, t: f64) -> f64 {
        self.phi.eval_guarded(t + 1.0).recip_or_zero()
    }

    /// `τ(t)` for `t` at or above the window, with its convergence record.
    pub fn tau<S: PhiArg>(&self, t: &S) -> Result<(S, CorrectionSequence)> {
        let (v, seq) = self.tau_parts(t, true)?;
        Ok((v + *t, seq))
    }

    /// `τ(t) - t`, computed without the cancellation of subtracting `t`.
    pub fn tau_correction<S: PhiArg>(&self, t: &S) -> Result<S> {
        Ok(self.tau_parts(t, true)?.0)
    }

    /// `τ_n(t)` at a fixed depth (`τ_0 = 0`, `τ_1(t) = t`).
    pub fn tau_n<S: PhiArg>(&self, t: &S, n: usize) -> Result<S> {
        if n == 0 {
            return Ok(t.constant_like(0.0));
        }
        let phis = self.phis(t, n)?;
        Ok(self.unroll_correction(t, n, &phis)? + *t)
    }

    // phis[i] = φ(t + i) when plain and below HUGE
    fn phis<S: PhiArg>(&self, t: &S, n: usize) -> Result<Vec<Option<S>>> {
        (0..=n)
            .map(|i| {
                let g = self.phi.eval_guarded(t.value() + i as f64);
                match g.to_f64() {
                    Some(v) if v < HUGE => (*t + i as f64).phi().map(Some),
                    _ => Ok(None),
                }
            })
            .collect()
    }

    // τ_n(t) - t, inside-out from τ_1(t + n - 1) = t + n - 1
    fn unroll_correction<S: PhiArg>(&self, t: &S, n: usize, phis: &[Option<S>]) -> Result<S> {
        let mut x = *t + (n - 1) as f64;
        let mut corr = t.constant_like(0.0);
        for i in (0..n - 1).rev() {
            corr = match &phis[i + 1] {
                Some(p) => x.div(p)?.ln_1p()?,
                None => t.constant_like(0.0),
            };
            x = corr + *t + i as f64;
        }
        Ok(corr)
    }

    fn tau_parts<S: PhiArg>(&self, t: &S, strict: bool) -> Result<(S, CorrectionSequence)> {
        let t0 = t.value();
        if t0 < self.window_t {
            return Err(Error::BelowWindow { t: t0, window: self.window_t });
        }
        let mut prod = 1.0;
        let mut n = 0;
        let mut bound;
        loop {
            n += 1;
            prod *= self.phi.eval_guarded(t0 + n as f64).recip_or_zero();
            bound = prod * (t0 + n as f64).abs();
            if bound < self.tolerance || n >= DEPTH_CAP {
                break;
            }
        }
        loop {
            let phis = self.phis(t, n + 1)?;
            let hi = self.unroll_correction(t, n + 1, &phis)?;
            let lo = self.unroll_correction(t, n, &phis)?;
            let delta = hi.distance(&lo) / (hi + *t).magnitude().max(1.0);
            let converged = bound < self.tolerance && (!strict || delta < self.tolerance);
            if converged || n + 1 >= DEPTH_CAP {
                let seq = CorrectionSequence {
                    kind: CorrectionKind::Tau,
                    point: t0,
                    depth: n + 1,
                    coeffs: (hi + *t).coefficients(),
                    report: ConvergenceReport { depth_used: n + 1, last_delta: delta, tail_bound: bound, converged },
                    contraction: self.contraction(t0),
                };
                return Ok((hi, seq));
            }
            n += 1;
            prod *= self.phi.eval_guarded(t0 + n as f64).recip_or_zero();
            bound = prod * (t0 + n as f64).abs();
        }
    }

    /// `F̃ = φ + τ` on or above the window.
    fn window_value<S: PhiArg>(&self, v: &S) -> Result<S> {
        let p = v.phi()?;
        let (c, _) = self.tau_parts(v, v.order() > 0)?;
        Ok(p + c + *v)
    }

    /// `F̃` extended to all arguments by `exp` upward and `ln` downward,
    /// landing on `[T + extra, T + extra + 1)`.
    fn extended<S: PhiArg>(&self, u: &S, extra: u32) -> Result<S> {
        let window = self.window_t + extra as f64;
        let shift = (u.value() - window).floor();
        if !shift.is_finite() || shift.abs() > 1e9 {
            return Err(Error::InvalidArgument(format!("argument {} is out of reach", u.value())));
        }
        let m = shift as i64;
        let mut val = self.window_value(&(*u - m as f64))?;
        if m > 0 {
            for _ in 0..m {
                val = val.exp()?;
            }
        } else {
            for _ in 0..(-m) {
                val = val.ln()?;
            }
        }
        Ok(val)
    }

    fn normalize(&self) -> Result<f64> {
        let f = |u: f64| match self.extended(&u, 0) {
            Ok(v) => Ok(v),
            Err(e) if e.is_overflow() => Ok(f64::INFINITY),
            Err(e) if e.is_domain() => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        };
        let (mut lo, mut hi) = (self.window_t, self.window_t + 1.0);
        for _ in 0..SHIFT_CAP {
            if f(lo)? > 1.0 {
                lo -= 1.0;
                hi -= 1.0;
            } else if f(hi)? < 1.0 {
                lo += 1.0;
                hi += 1.0;
            } else {
                return root::bisect_then_secant(f, 1.0, lo, hi, 1e-13)
                    .map_err(|e| Error::Normalization(e.to_string()));
            }
        }
        Err(Error::Normalization("no bracket for 𝓕(0) = 1".into()))
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if !(t > DOMAIN_EDGE + EDGE_GAP) {
            return Err(Error::OutsideDomain { k: 2, t, alpha: DOMAIN_EDGE });
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.eval_scalar(&t)
    }

    pub fn eval_shifted(&self, t: f64, extra: u32) -> Result<f64> {
        self.check_domain(t)?;
        self.extended(&(t + self.omega), extra)
    }

    pub fn eval_jet(&self, t: &Jet) -> Result<Jet> {
        self.eval_scalar(t)
    }

    pub fn eval_scalar<S: PhiArg>(&self, t: &S) -> Result<S> {
        self.check_domain(t.value())?;
        self.extended(&(*t + self.omega), 0)
    }

    /// Level-index output: climbs with guarded `exp` past the window.
    pub fn eval_guarded(&self, t: f64) -> Result<GuardedReal> {
        self.check_domain(t)?;
        let u = t + self.omega;
        let m = (u - self.window_t).floor();
        if m <= 0.0 {
            return GuardedReal::from_plain(self.extended(&u, 0)?);
        }
        if m > 1e18 {
            return Err(Error::Unrepresentable);
        }
        let base = self.window_value(&(u - m))?;
        GuardedReal::from_plain(base)?.exp_n(m as u64)
    }

    /// The super-logarithm `𝓕⁻¹(x)`: Abel reduction into `[0, e]`, then
    /// bisection and a secant polish on `[-1, 1]`.
    pub fn slog(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::InvalidArgument("NaN argument".into()));
        }
        let mut y = x;
        let mut count = 0i64;
        while y > E {
            y = y.ln();
            count += 1;
        }
        if y < 0.0 {
            y = y.exp();
            count -= 1;
        }
        Ok(self.slog_core(y)? + count as f64)
    }

    pub fn slog_guarded(&self, x: &GuardedReal) -> Result<f64> {
        let mut g = *x;
        let mut count = 0i64;
        while !g.is_plain() {
            g = g.ln()?;
            count += 1;
        }
        Ok(self.slog(g.residual())? + count as f64)
    }

    fn slog_core(&self, y: f64) -> Result<f64> {
        if y == 0.0 {
            return Ok(-1.0);
        }
        if y == E {
            return Ok(1.0);
        }
        let f = |t: f64| self.eval(t);
        let lo_val = f(-1.0)?;
        let hi_val = f(1.0)?;
        if y <= lo_val {
            return Ok(-1.0);
        }
        if y >= hi_val {
            return Ok(1.0);
        }
        root::bisect_then_secant(f, y, -1.0, 1.0, 1e-15)
    }
}

impl Default for Tetration {
    fn default() -> Self {
        Tetration::new(DEFAULT_TOLERANCE).expect("tetration construction with default tolerance")
    }
}
