//! The tower of hyper-operations `E_k = e ↑^k`.
//!
//! Level 1 is `exp`. Each level `k >= 2` is built from level `k - 1`: a
//! convergence window is chosen, the normalization `ω_k` is solved so that
//! `E_k(0) = 1`, and the parity edge `α_k` is recorded (domain edge for
//! even `k`, range edge for odd `k`). [`Tetration`] is an independent
//! construction of level 2 from `phi` and the `τ` correction.

mod engine;
mod tetration;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::comp::ConvergenceReport;
use crate::error::{Error, Result};
use crate::guarded::GuardedReal;
use crate::jet::Jet;
use crate::root;
use crate::scalar::Scalar;

pub use engine::EDGE_GAP;
pub use tetration::Tetration;

/// Tolerance used for tower construction unless configured otherwise.
pub const DEFAULT_TOLERANCE: f64 = 1e-13;

const WINDOW_STEPS: usize = 20;
const CONTRACTION_LIMIT: f64 = 0.5;
const NORMALIZATION_WIDTH: f64 = 1e-13;
const SHIFT_CAP: usize = 60;
const ALPHA_STORE_TOL: f64 = 1e-14;
const ALPHA_STORE_CAP: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowerConfig {
    /// Truncation tolerance for the correction limits.
    pub tolerance: f64,
    /// Cap on correction depth.
    pub depth_cap: usize,
}

impl Default for TowerConfig {
    fn default() -> Self {
        TowerConfig { tolerance: DEFAULT_TOLERANCE, depth_cap: crate::comp::DEFAULT_DEPTH_CAP }
    }
}

impl TowerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::InvalidArgument(format!("tolerance must lie in (0, 1), got {}", self.tolerance)));
        }
        if self.depth_cap < 2 {
            return Err(Error::InvalidArgument("depth cap must be at least 2".into()));
        }
        Ok(())
    }
}

/// The constants that pin down one constructed level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperOpLevel {
    pub k: usize,
    /// Normalization shift: `E_k(t) = G(t + omega)`.
    pub omega: f64,
    /// Domain edge (even `k`) or range edge (odd `k`).
    pub alpha: Option<f64>,
    /// Left edge of the evaluation window.
    pub window_t: f64,
    pub tolerance: f64,
}

impl HyperOpLevel {
    pub fn is_even(&self) -> bool {
        self.k.is_multiple_of(2)
    }

    /// Lower edge of the domain; `None` means all of ℝ.
    pub fn domain_edge(&self) -> Option<f64> {
        if self.is_even() {
            self.alpha
        } else {
            None
        }
    }

    /// Lower edge of the range; `None` means all of ℝ.
    pub fn range_edge(&self) -> Option<f64> {
        if self.is_even() {
            None
        } else {
            self.alpha
        }
    }
}

pub(crate) struct Origin {
    pub coeffs: Vec<f64>,
    pub radius: f64,
    pub scale: f64,
}

pub(crate) struct LevelState {
    pub params: HyperOpLevel,
    origin: OnceLock<Option<Origin>>,
}

impl LevelState {
    fn new(params: HyperOpLevel) -> Self {
        LevelState { params, origin: OnceLock::new() }
    }
}

/// A built tower `E_1, ..., E_K`. Immutable once built; evaluation is
/// reentrant and the lazily computed caches are write-once.
pub struct Tower {
    config: TowerConfig,
    levels: Vec<LevelState>,
}

fn exp_level(tolerance: f64) -> HyperOpLevel {
    HyperOpLevel { k: 1, omega: 0.0, alpha: Some(0.0), window_t: 0.0, tolerance }
}

impl Tower {
    /// A tower holding only `E_1 = exp`.
    pub fn new(config: TowerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Tower { config, levels: vec![LevelState::new(exp_level(config.tolerance))] })
    }

    /// Builds levels up to `max_level`.
    pub fn build(config: TowerConfig, max_level: usize) -> Result<Self> {
        let mut t = Tower::new(config)?;
        while t.max_level() < max_level {
            t.build_next()?;
        }
        Ok(t)
    }

    /// Reassembles a tower from stored constants, e.g. a disk cache.
    pub fn from_params(config: TowerConfig, params: Vec<HyperOpLevel>) -> Result<Self> {
        let mut t = Tower::new(config)?;
        for p in params.into_iter().filter(|p| p.k >= 2) {
            if p.k != t.max_level() + 1 {
                return Err(Error::MissingLevel(t.max_level() + 1));
            }
            if !(p.omega.is_finite() && p.window_t.is_finite()) {
                return Err(Error::Construction { k: p.k, reason: "non-finite constants".into() });
            }
            t.levels.push(LevelState::new(p));
        }
        Ok(t)
    }

    pub fn config(&self) -> &TowerConfig {
        &self.config
    }

    pub fn max_level(&self) -> usize {
        self.levels.len()
    }

    pub fn params_list(&self) -> Vec<HyperOpLevel> {
        self.levels.iter().map(|l| l.params.clone()).collect()
    }

    pub fn level(&self, k: usize) -> Result<Level<'_>> {
        self.state(k)?;
        Ok(Level { tower: self, k })
    }

    pub(crate) fn state(&self, k: usize) -> Result<&LevelState> {
        if k == 0 {
            return Err(Error::InvalidArgument("levels start at 1".into()));
        }
        self.levels.get(k - 1).ok_or(Error::MissingLevel(k))
    }

    pub(crate) fn params(&self, k: usize) -> Result<&HyperOpLevel> {
        Ok(&self.state(k)?.params)
    }

    pub(crate) fn origin(&self, j: usize) -> Option<&Origin> {
        let st = self.levels.get(j.checked_sub(1)?)?;
        st.origin.get_or_init(|| self.compute_origin(j)).as_ref()
    }

    /// Constructs the next level from the current top one.
    pub fn build_next(&mut self) -> Result<&HyperOpLevel> {
        let k = self.max_level() + 1;
        let fail = |reason: String| Error::Construction { k, reason };
        let window_t = self.find_window(k).map_err(|e| fail(format!("window search: {e}")))?;
        let provisional = HyperOpLevel {
            k,
            omega: f64::NAN,
            alpha: k.is_multiple_of(2).then_some(-(k as f64)),
            window_t,
            tolerance: self.config.tolerance,
        };
        self.levels.push(LevelState::new(provisional));
        match self.finish_level(k) {
            Ok(()) => Ok(&self.levels[k - 1].params),
            Err(e) => {
                self.levels.pop();
                Err(match e {
                    Error::Construction { .. } => e,
                    other => fail(other.to_string()),
                })
            }
        }
    }

    fn finish_level(&mut self, k: usize) -> Result<()> {
        let window_t = self.params(k)?.window_t;
        let samples: Vec<f64> = (0..=4).map(|i| window_t + 0.25 * i as f64).collect();
        let mut prev = f64::NEG_INFINITY;
        for &v in &samples {
            let g = self.core(k, &v)?;
            if !(g > prev && g > 0.0) {
                return Err(Error::Construction {
                    k,
                    reason: format!("window function not increasing and positive at {v}: {g} after {prev}"),
                });
            }
            prev = g;
        }
        let omega = self.find_omega(k)?;
        self.levels[k - 1].params.omega = omega;
        let alpha = self.stored_alpha(k)?;
        self.levels[k - 1].params.alpha = Some(alpha);
        Ok(())
    }

    /// Smallest half-integer `T >= 0` with `Φ_k(T+1) >= 2` and step
    /// contraction at most 1/2 on `[T, T+2]`.
    fn find_window(&self, k: usize) -> Result<f64> {
        'next: for i in 0..=WINDOW_STEPS {
            let t = 0.5 * i as f64;
            let phi1 = self.big_phi_guarded(k, t + 1.0)?;
            if phi1.to_f64().is_some_and(|v| v < 2.0) {
                continue;
            }
            for s in 0..=4 {
                if self.step_contraction(k, t + 0.5 * s as f64)? > CONTRACTION_LIMIT {
                    continue 'next;
                }
            }
            return Ok(t);
        }
        Err(Error::Construction { k, reason: "no contracting window found".into() })
    }

    fn find_omega(&self, k: usize) -> Result<f64> {
        let window = self.params(k)?.window_t;
        let f = |u: f64| match self.g_ext(k, &u, 0) {
            Ok(v) => Ok(v),
            Err(e) if e.is_overflow() => Ok(f64::INFINITY),
            Err(e) if e.is_domain() => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        };
        let (mut lo, mut hi) = (window, window + 1.0);
        for _ in 0..SHIFT_CAP {
            if f(lo)? > 1.0 {
                lo -= 1.0;
                hi -= 1.0;
            } else if f(hi)? < 1.0 {
                lo += 1.0;
                hi += 1.0;
            } else {
                return root::bisect_then_secant(f, 1.0, lo, hi, NORMALIZATION_WIDTH)
                    .map_err(|e| Error::Normalization(e.to_string()));
            }
        }
        Err(Error::Normalization(format!("level {k}: no bracket for E_k(0) = 1")))
    }

    fn stored_alpha(&self, k: usize) -> Result<f64> {
        if k == 2 {
            return Ok(-2.0);
        }
        if k % 2 == 1 {
            let est = self.iterate_inverse_from_zero(k, ALPHA_STORE_TOL, ALPHA_STORE_CAP)?;
            return Ok(est.value);
        }
        let below = self.params(k - 1)?.alpha.ok_or(Error::MissingLevel(k - 1))?;
        Ok(self.a_f64(k, below)? - 1.0)
    }

    fn iterate_inverse_from_zero(&self, k: usize, tol: f64, cap: usize) -> Result<AlphaEstimate> {
        let mut x = 0.0;
        for i in 1..=cap {
            let next = self.a_f64(k - 1, x)?;
            let delta = (next - x).abs();
            x = next;
            if delta < tol {
                return Ok(AlphaEstimate { value: x, edge: EdgeKind::Range, iterations: i, converged: true });
            }
        }
        Ok(AlphaEstimate { value: x, edge: EdgeKind::Range, iterations: cap, converged: false })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    Domain,
    Range,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub value: f64,
    pub edge: EdgeKind,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrectionKind {
    Tau,
    Lambda,
}

/// One evaluated correction limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionSequence {
    pub kind: CorrectionKind,
    pub point: f64,
    pub depth: usize,
    /// Taylor coefficients of the limit (just the value for plain input).
    pub coeffs: Vec<f64>,
    pub report: ConvergenceReport,
    /// Contraction factor of one correction step at `point`.
    pub contraction: f64,
}

/// A borrowed view of one level.
#[derive(Clone, Copy)]
pub struct Level<'a> {
    tower: &'a Tower,
    k: usize,
}

impl<'a> Level<'a> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn params(&self) -> &'a HyperOpLevel {
        &self.tower.levels[self.k - 1].params
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.tower.e(self.k, &t)
    }

    /// Evaluation with the landing window shifted up by `extra` steps.
    pub fn eval_shifted(&self, t: f64, extra: u32) -> Result<f64> {
        self.tower.e_shifted(self.k, &t, extra)
    }

    pub fn eval_jet(&self, t: &Jet) -> Result<Jet> {
        self.tower.e(self.k, t)
    }

    pub fn eval_scalar<S: Scalar>(&self, t: &S) -> Result<S> {
        self.tower.e(self.k, t)
    }

    pub fn eval_guarded(&self, t: f64) -> Result<GuardedReal> {
        self.tower.eval_guarded(self.k, t)
    }

    pub fn inverse(&self, x: f64) -> Result<f64> {
        self.tower.a_f64(self.k, x)
    }

    pub fn inverse_jet(&self, x: &Jet) -> Result<Jet> {
        self.tower.a(self.k, x)
    }

    pub fn inverse_guarded(&self, x: &GuardedReal) -> Result<GuardedReal> {
        self.tower.a_guarded(self.k, x)
    }

    fn require_built(&self, what: &str) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidArgument(format!("{what} exists for levels k >= 2")));
        }
        Ok(())
    }

    /// The auxiliary function `Φ_k(t)`.
    pub fn aux_phi(&self, t: f64) -> Result<f64> {
        self.require_built("the auxiliary function")?;
        self.tower.big_phi(self.k, &t)
    }

    pub fn aux_phi_jet(&self, t: &Jet) -> Result<Jet> {
        self.require_built("the auxiliary function")?;
        self.tower.big_phi(self.k, t)
    }

    pub fn aux_phi_guarded(&self, t: f64) -> Result<GuardedReal> {
        self.require_built("the auxiliary function")?;
        self.tower.big_phi_guarded(self.k, t)
    }

    /// The correction `Λ(t)` with its convergence record; `t` must lie at or
    /// above the window.
    pub fn lambda<S: Scalar>(&self, t: &S) -> Result<(S, CorrectionSequence)> {
        self.require_built("the correction")?;
        let window = self.params().window_t;
        if t.value() < window {
            return Err(Error::BelowWindow { t: t.value(), window });
        }
        let out = self.tower.lambda(self.k, t, true)?;
        let seq = CorrectionSequence {
            kind: CorrectionKind::Lambda,
            point: t.value(),
            depth: out.report.depth_used,
            coeffs: out.value.coefficients(),
            report: out.report,
            contraction: self.tower.step_contraction(self.k, t.value())?,
        };
        Ok((out.value, seq))
    }

    /// One correction step `A_(k-1)(Φ(t+1) + x) - Φ(t)` with `x` in the
    /// slot of `Λ(t+1)`.
    pub fn correction_step<S: Scalar>(&self, t: &S, x: &S) -> Result<S> {
        self.require_built("the correction step")?;
        self.tower.correction_step(self.k, t, x)
    }

    /// `A'_(k-1)(Φ_k(t+1))`, the contraction factor of one step at `x = 0`.
    pub fn step_contraction(&self, t: f64) -> Result<f64> {
        self.require_built("the correction step")?;
        self.tower.step_contraction(self.k, t)
    }

    /// The parity edge. Odd `k >= 3`: the limit of `A_(k-1)` iterated from
    /// 0, stopped at `|Δ| < 1e-10` or `cap`. `k = 2`: exactly -2. Even
    /// `k >= 4`: `A_k(α_(k-1)) - 1`, the domain edge inherited from the
    /// predecessor's range edge. `k = 1`: the range edge 0 of `exp`.
    pub fn alpha_estimate(&self, cap: usize) -> Result<AlphaEstimate> {
        match self.k {
            1 => Ok(AlphaEstimate { value: 0.0, edge: EdgeKind::Range, iterations: 0, converged: true }),
            2 => Ok(AlphaEstimate { value: -2.0, edge: EdgeKind::Domain, iterations: 0, converged: true }),
            k if k % 2 == 1 => self.tower.iterate_inverse_from_zero(k, 1e-10, cap),
            k => {
                let below = self.tower.params(k - 1)?.alpha.ok_or(Error::MissingLevel(k - 1))?;
                let value = self.tower.a_f64(k, below)? - 1.0;
                Ok(AlphaEstimate { value, edge: EdgeKind::Domain, iterations: 1, converged: true })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn tower() -> &'static Tower {
        static T: OnceLock<Tower> = OnceLock::new();
        T.get_or_init(|| Tower::build(TowerConfig::default(), 4).unwrap())
    }

    #[test]
    fn ladder_values() {
        let t = tower();
        for k in 1..=4 {
            let l = t.level(k).unwrap();
            assert!((l.eval(0.0).unwrap() - 1.0).abs() < 1e-12, "k={k}");
            assert!((l.eval(1.0).unwrap() - E).abs() < 1e-11, "k={k}");
            for j in 1..k {
                let v = l.eval(-(j as f64)).unwrap();
                assert!((v - (1.0 - j as f64)).abs() < 1e-10, "k={k} j={j}: {v}");
            }
        }
    }

    #[test]
    fn level_two_is_tetration() {
        let t = tower();
        let l = t.level(2).unwrap();
        let tet = Tetration::default();
        assert!((l.params().omega - tet.omega()).abs() < 1e-12);
        for i in 0..8 {
            let s = -1.5 + 0.5 * i as f64;
            assert!((l.eval(s).unwrap() - tet.eval(s).unwrap()).abs() < 1e-10 * tet.eval(s).unwrap().abs().max(1.0));
        }
    }

    #[test]
    fn parity_edges() {
        let t = tower();
        let a3 = t.level(3).unwrap().params().alpha.unwrap();
        let a4 = t.level(4).unwrap().params().alpha.unwrap();
        assert!(a3 > -2.0 && a3 < -1.0);
        assert!(a4 > -4.0 && a4 < -3.0);
        let l2 = t.level(2).unwrap();
        assert!((l2.inverse(a3).unwrap() - a3).abs() < 1e-10);
        assert!((l2.eval(a3).unwrap() - a3).abs() < 1e-10);
        // E_3 flattens onto its range edge far to the left
        assert!((t.level(3).unwrap().eval(-40.0).unwrap() - a3).abs() < 1e-9);
        assert!(t.level(4).unwrap().eval(a4).unwrap_err().is_domain());
        assert!(t.level(3).unwrap().inverse(a3 - 0.1).unwrap_err().is_domain());
    }

    #[test]
    fn inverse_round_trips() {
        let t = tower();
        for k in 2..=4 {
            let l = t.level(k).unwrap();
            for s in [-0.7, 0.2, 0.95, 1.3] {
                let x = l.eval(s).unwrap();
                assert!((l.inverse(x).unwrap() - s).abs() < 1e-10, "k={k} s={s}");
            }
        }
    }

    #[test]
    fn functional_equation_spot_checks() {
        let t = tower();
        for k in 2..=4 {
            let (l, lm) = (t.level(k).unwrap(), t.level(k - 1).unwrap());
            for s in [-0.9, -0.1, 0.4] {
                let a = l.eval(s + 1.0).unwrap();
                let b = lm.eval(l.eval(s).unwrap()).unwrap();
                assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "k={k} s={s}");
            }
        }
    }

    #[test]
    fn landing_window_is_immaterial() {
        let l = tower().level(3).unwrap();
        for s in [-0.4, 0.3] {
            assert!((l.eval(s).unwrap() - l.eval_shifted(s, 1).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn jets_match_differences() {
        let l = tower().level(3).unwrap();
        let s = 0.4;
        let j = l.eval_jet(&Jet::variable(s, 2)).unwrap();
        let h = 1e-4;
        let (p, m) = (l.eval(s + h).unwrap(), l.eval(s - h).unwrap());
        assert!((j.derivative(1) - (p - m) / (2.0 * h)).abs() < 1e-6);
        assert!((j.value() - l.eval(s).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn guarded_climbs_past_overflow() {
        let l = tower().level(3).unwrap();
        assert!(l.eval(3.0).unwrap_err().is_overflow());
        let g = l.eval_guarded(3.0).unwrap();
        assert!(g.level() > 1000);
        let g2 = l.eval_guarded(1.5).unwrap();
        assert!((g2.to_f64().unwrap() - l.eval(1.5).unwrap()).abs() < 1e-12 * l.eval(1.5).unwrap());
    }

    #[test]
    fn correction_below_window_is_refused() {
        let l = tower().level(3).unwrap();
        assert!(matches!(l.lambda(&0.1), Err(Error::BelowWindow { .. })));
        let (_, seq) = l.lambda(&0.7).unwrap();
        assert!(seq.report.converged);
        assert!(seq.contraction < 0.5);
    }

    #[test]
    fn stored_constants_rebuild_the_tower() {
        let t = tower();
        let copy = Tower::from_params(TowerConfig::default(), t.params_list()).unwrap();
        for s in [-0.5, 0.8] {
            assert_eq!(copy.level(4).unwrap().eval(s).unwrap(), t.level(4).unwrap().eval(s).unwrap());
        }
        let mut gapped = t.params_list();
        gapped.remove(2);
        assert!(matches!(Tower::from_params(TowerConfig::default(), gapped), Err(Error::MissingLevel(3))));
    }
}
