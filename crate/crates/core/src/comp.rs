//! Finite and infinite nested compositions `h_1(s, h_2(s, ... h_m(s, z)))`.
//!
//! A [`StepFamily`] supplies the steps `h_j` together with sup-norm bounds
//! `rho(j)` over a declared region. [`nest`] evaluates a fixed window of
//! steps inside-out; [`converge`] grows the depth until successive values
//! plus a geometric tail estimate fall below the tolerance.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Numeric;

/// An indexed family of composition steps. Indices start at 1.
pub trait StepFamily<T> {
    fn step(&self, j: usize, s: &T, z: &T) -> Result<T>;
    /// Sup-norm bound of step `j` over the family's declared region.
    fn rho(&self, j: usize) -> f64;
}

/// A family assembled from two closures.
pub struct FnFamily<F, R> {
    step: F,
    rho: R,
}

impl<F, R> FnFamily<F, R> {
    pub fn new(step: F, rho: R) -> Self {
        FnFamily { step, rho }
    }
}

impl<T, F, R> StepFamily<T> for FnFamily<F, R>
where
    F: Fn(usize, &T, &T) -> Result<T>,
    R: Fn(usize) -> f64,
{
    fn step(&self, j: usize, s: &T, z: &T) -> Result<T> {
        (self.step)(j, s, z)
    }
    fn rho(&self, j: usize) -> f64 {
        (self.rho)(j)
    }
}

/// A closed disk in the complex plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub center: Complex64,
    pub radius: f64,
}

impl Region {
    /// The default region: the closed unit disk about `center`.
    pub fn around(center: Complex64) -> Self {
        Region { center, radius: 1.0 }
    }

    fn boundary(&self, n: usize) -> impl Iterator<Item = Complex64> + '_ {
        (0..n).map(move |i| {
            let theta = std::f64::consts::TAU * i as f64 / n as f64;
            self.center + Complex64::from_polar(self.radius, theta)
        })
    }
}

/// Default boundary sampling density for [`estimate_rho`].
pub const RHO_GRID: usize = 32;

/// Estimates `sup |h(s, z)|` over `s` in `s_region` and `z` in `z_region`
/// by sampling both boundary circles on an `n x n` grid. For maps analytic
/// in each variable the maximum sits on the boundary.
pub fn estimate_rho<H>(h: H, s_region: &Region, z_region: &Region, n: usize) -> f64
where
    H: Fn(Complex64, Complex64) -> Complex64,
{
    let zs: Vec<Complex64> = z_region.boundary(n).collect();
    s_region
        .boundary(n)
        .flat_map(|s| zs.iter().map(move |z| (s, *z)))
        .map(|(s, z)| h(s, z).norm())
        .fold(0.0, f64::max)
}

/// The step family `h_j(s, z) = exp(s - j + z)` of the entire function
/// `phi`, with the analytic bound over `|s - c| <= R`, `|z| <= 1`.
#[derive(Clone, Copy, Debug)]
pub struct ExpShiftFamily {
    pub region: Region,
}

impl ExpShiftFamily {
    pub fn new(region: Region) -> Self {
        ExpShiftFamily { region }
    }
}

impl StepFamily<f64> for ExpShiftFamily {
    fn step(&self, j: usize, s: &f64, z: &f64) -> Result<f64> {
        crate::scalar::Scalar::exp(&(s - j as f64 + z))
    }
    fn rho(&self, j: usize) -> f64 {
        (self.region.center.re + self.region.radius - j as f64 + 1.0).exp()
    }
}

impl StepFamily<Complex64> for ExpShiftFamily {
    fn step(&self, j: usize, s: &Complex64, z: &Complex64) -> Result<Complex64> {
        let v = (s - j as f64 + z).exp();
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow { x: s.re })
        }
    }
    fn rho(&self, j: usize) -> f64 {
        <Self as StepFamily<f64>>::rho(self, j)
    }
}

impl StepFamily<crate::Jet> for ExpShiftFamily {
    fn step(&self, j: usize, s: &crate::Jet, z: &crate::Jet) -> Result<crate::Jet> {
        (*s + *z - j as f64).exp()
    }
    fn rho(&self, j: usize) -> f64 {
        <Self as StepFamily<f64>>::rho(self, j)
    }
}

/// Inside-out evaluation `h_n(s, h_(n+1)(s, ... h_m(s, seed)))`: exactly
/// `m - n + 1` step applications. A failing step is reported with its index.
pub fn nest<T, F>(f: &F, s: &T, n: usize, m: usize, seed: T) -> Result<T>
where
    F: StepFamily<T> + ?Sized,
{
    if n == 0 || n > m {
        return Err(Error::InvalidArgument(format!("nest needs 1 <= n <= m, got n={n}, m={m}")));
    }
    let mut z = seed;
    for j in (n..=m).rev() {
        z = f.step(j, s, &z).map_err(|e| e.at_step(j))?;
    }
    Ok(z)
}

/// Default cap on indices scanned by [`tail_norm_threshold`].
pub const INDEX_CAP: usize = 10_000;

/// The smallest `N` such that `rho(n) < eps` for every `n >= N`, scanning
/// up to `cap`; 0 when every index already qualifies.
pub fn tail_norm_threshold<T, F>(f: &F, eps: f64, cap: usize) -> Result<usize>
where
    F: StepFamily<T> + ?Sized,
{
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
    }
    let mut last_bad = None;
    for n in 1..=cap {
        if !(f.rho(n) < eps) {
            last_bad = Some(n);
        }
    }
    match last_bad {
        Some(n) if n == cap => Err(Error::NoThreshold { eps, cap }),
        Some(n) => Ok(n + 1),
        None => Ok(0),
    }
}

/// Truncation bookkeeping for an infinite composition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub depth_used: usize,
    /// Last successive difference, scaled by `max(1, |value|)`.
    pub last_delta: f64,
    /// Geometric estimate of the remaining tail, scaled the same way.
    pub tail_bound: f64,
    pub converged: bool,
}

/// Depth control for [`converge`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompPolicy {
    pub depth_cap: usize,
}

pub const DEFAULT_DEPTH_CAP: usize = 256;

impl Default for CompPolicy {
    fn default() -> Self {
        CompPolicy { depth_cap: DEFAULT_DEPTH_CAP }
    }
}

/// Limit of `nest(f, s, 1, m, seed)` as `m` grows.
///
/// Stops at the first depth where the successive difference plus the
/// geometric tail `delta * r / (1 - r)`, with `r = rho(m+1) / rho(m)`, is
/// below `eps * max(1, |value|)`. Hitting the depth cap is not an error:
/// the best value comes back with `converged = false`.
pub fn converge<T, F>(f: &F, s: &T, seed: T, eps: f64, policy: CompPolicy) -> Result<(T, ConvergenceReport)>
where
    T: Numeric,
    F: StepFamily<T> + ?Sized,
{
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let mut prev = seed.clone();
    let mut report = ConvergenceReport {
        depth_used: 0,
        last_delta: f64::INFINITY,
        tail_bound: f64::INFINITY,
        converged: false,
    };
    for m in 1..=policy.depth_cap.max(1) {
        let cur = nest(f, s, 1, m, seed.clone())?;
        if !cur.is_finite() {
            return Err(Error::Overflow { x: f64::NAN }.at_step(m));
        }
        let scale = cur.magnitude().max(1.0);
        let delta = cur.distance(&prev) / scale;
        let tail = if delta == 0.0 {
            0.0
        } else {
            let r = f.rho(m + 1) / f.rho(m);
            if r.is_finite() && r < 1.0 {
                delta * r / (1.0 - r)
            } else {
                f64::INFINITY
            }
        };
        report = ConvergenceReport {
            depth_used: m,
            last_delta: delta,
            tail_bound: tail,
            converged: delta + tail < eps,
        };
        prev = cur;
        if report.converged {
            break;
        }
    }
    Ok((prev, report))
}

/// The successive differences `|phi_(m+1) - phi_m|` for `m = 1..=depth`.
pub fn successive_deltas<T, F>(f: &F, s: &T, seed: T, depth: usize) -> Result<Vec<f64>>
where
    T: Numeric,
    F: StepFamily<T> + ?Sized,
{
    let mut prev = nest(f, s, 1, 1, seed.clone())?;
    let mut out = Vec::with_capacity(depth);
    for m in 2..=depth + 1 {
        let cur = nest(f, s, 1, m, seed.clone())?;
        out.push(cur.distance(&prev));
        prev = cur;
    }
    Ok(out)
}
