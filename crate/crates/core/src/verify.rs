//! The verification suite. Each invariant of the library is a named check
//! that reports its worst residual against a threshold on a stated grid.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::comp::{self, CompPolicy, ExpShiftFamily, Region};
use crate::error::{Error, Result};
use crate::guarded::GuardedReal;
use crate::jet::Jet;
use crate::phi::{self, PHI_EPS};
use crate::scalar::Scalar;
use crate::tower::{HyperOpLevel, Level, Tetration, Tower, TowerConfig};

/// Tolerance for identities that involve one numerical inversion.
pub const INVERSION_THRESHOLD: f64 = 1e-8;
/// Tolerance for identities built from direct compositions only.
pub const COMPOSITION_THRESHOLD: f64 = 1e-10;

/// Outcome of one check. `passed` holds exactly when
/// `max_residual <= threshold`; a NaN residual never passes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check_id: String,
    pub grid: String,
    pub max_residual: f64,
    pub threshold: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub artifacts: Option<Vec<[f64; 2]>>,
}

pub struct RegistryEntry {
    pub id: &'static str,
    pub module: &'static str,
    pub statement: &'static str,
    /// Whether [`run_suite`] evaluates it; the rest are enforced by tests.
    pub suite_checked: bool,
}

/// One entry per stated invariant, in module order.
pub const REGISTRY: &[RegistryEntry] = &[
    RegistryEntry { id: "jet.finite_difference", module: "jet", statement: "jet coefficients times l! match central differences of random elementary ops to 1e-4", suite_checked: true },
    RegistryEntry { id: "jet.order_zero_projection", module: "jet", statement: "the value slot of every jet op equals the scalar op", suite_checked: true },
    RegistryEntry { id: "jet.log_exp_inverse", module: "jet", statement: "ln after exp and exp after ln return the input to 1e-12 per coefficient", suite_checked: true },
    RegistryEntry { id: "comp.tail_bound", module: "comp", statement: "tails starting past the threshold index stay below eps on sampled (s, z, n, m)", suite_checked: true },
    RegistryEntry { id: "comp.truncation_consistency", module: "comp", statement: "limits at eps and eps/10 differ by less than eps", suite_checked: true },
    RegistryEntry { id: "comp.delta_decay", module: "comp", statement: "log successive differences fall with slope at most -0.95", suite_checked: true },
    RegistryEntry { id: "comp.split_associativity", module: "comp", statement: "a nested window equals its split into an outer window around an inner seed", suite_checked: true },
    RegistryEntry { id: "phi.functional_equation", module: "phi", statement: "phi(t+1) = exp(t + phi(t)) plainly on [-10, 2] and in log space on [2, 6]", suite_checked: true },
    RegistryEntry { id: "phi.monotone_positive", module: "phi", statement: "phi is positive and strictly increasing on a 0.01 grid over [-10, 3]", suite_checked: true },
    RegistryEntry { id: "phi.complex_functional_equation", module: "phi", statement: "the functional equation holds at 100 seeded complex points with |s| <= 2", suite_checked: true },
    RegistryEntry { id: "phi.jet_consistency", module: "phi", statement: "phi jet derivatives match contour integrals and differences for orders <= 3", suite_checked: true },
    RegistryEntry { id: "phi.aux_positive_monotone", module: "phi", statement: "each auxiliary function is positive and strictly increasing on its window", suite_checked: true },
    RegistryEntry { id: "phi.guarded_ordering", module: "phi", statement: "level-index ordering is total and agrees with plain ordering on overlap", suite_checked: true },
    RegistryEntry { id: "tower.functional_equation", module: "tower", statement: "E_(k-1)(E_k(t)) = E_k(t+1) on 200 points reaching the lower edge", suite_checked: true },
    RegistryEntry { id: "tower.ladder", module: "tower", statement: "E_k(-j) = 1 - j for 0 <= j < k", suite_checked: true },
    RegistryEntry { id: "tower.bijectivity", module: "tower", statement: "inverse after evaluation and evaluation after inverse are identities", suite_checked: true },
    RegistryEntry { id: "tower.monotone_chain", module: "tower", statement: "first derivatives are positive, and F'(t-1) = F'(t)/F(t) on (-1, 2]", suite_checked: true },
    RegistryEntry { id: "tower.tau_decay", module: "tower", statement: "tau(t) - t and tau'(t) - 1 stay under a fitted A exp(-e^t); high coefficients vanish by T+3", suite_checked: true },
    RegistryEntry { id: "tower.lambda_comparison", module: "tower", statement: "Lambda(t) <= t + A_(k-1)(1 + Lambda(t+1)/Phi(t+1)) on the window", suite_checked: true },
    RegistryEntry { id: "tower.sublog", module: "tower", statement: "A_(k-1)(ab) <= A_(k-1)(a) + A_(k-1)(b) for a, b >= E_(k-1)(1)", suite_checked: true },
    RegistryEntry { id: "tower.window_shift", module: "tower", statement: "landing one window higher changes nothing beyond 1e-9", suite_checked: true },
    RegistryEntry { id: "verify.determinism", module: "verify", statement: "equal configs give bit-identical result tables", suite_checked: false },
    RegistryEntry { id: "verify.registry", module: "verify", statement: "check ids map one to one onto registry entries", suite_checked: false },
    RegistryEntry { id: "cli.exit_codes", module: "cli", statement: "exit 0 on success, 1 on infrastructure failure, 2 on usage or domain errors", suite_checked: false },
    RegistryEntry { id: "cli.csv_stable", module: "cli", statement: "equal config and seed give byte-identical csv", suite_checked: false },
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub depth_cap: usize,
    pub jet_order: usize,
    /// Random samples per level for the sampled checks.
    pub samples: usize,
    /// Grid points per unit interval within one unit of a domain edge.
    pub edge_density: usize,
    /// Grid points per unit interval elsewhere.
    pub interior_density: usize,
    /// Levels from this one up have their dense grids thinned by 8.
    pub thin_from_level: usize,
    pub artifacts: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            depth_cap: comp::DEFAULT_DEPTH_CAP,
            jet_order: crate::jet::DEFAULT_ORDER,
            samples: 24,
            edge_density: 200,
            interior_density: 50,
            thin_from_level: 4,
            artifacts: false,
        }
    }
}

/// Runs every suite check that the given levels support, sorted by id.
///
/// An empty list gives no results; a tower of `exp` alone runs only the
/// jet checks and the level-1 tower checks.
pub fn run_suite(levels: &[HyperOpLevel], config: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let Some(top) = levels.iter().max_by_key(|l| l.k) else {
        return Ok(Vec::new());
    };
    let tower_config = TowerConfig { tolerance: top.tolerance, depth_cap: config.depth_cap };
    let tower = Tower::from_params(tower_config, levels.to_vec())?;
    let ctx = Ctx { tower: &tower, cfg: config, tet: None };
    let mut out = vec![
        ctx.jet_finite_difference(),
        ctx.jet_order_zero_projection(),
        ctx.jet_log_exp_inverse(),
        ctx.tower_ladder(),
        ctx.tower_bijectivity(),
    ];
    if tower.max_level() >= 2 {
        let p2 = tower.level(2)?.params().clone();
        let tet = Tetration::with_constants(p2.omega, p2.window_t, p2.tolerance);
        let ctx = Ctx { tet: Some(&tet), ..ctx };
        out.extend([
            ctx.comp_tail_bound(),
            ctx.comp_truncation_consistency(),
            ctx.comp_delta_decay(),
            ctx.comp_split_associativity(),
            ctx.phi_functional_equation(),
            ctx.phi_monotone_positive(),
            ctx.phi_complex_functional_equation(),
            ctx.phi_jet_consistency(),
            ctx.phi_aux_positive_monotone(),
            ctx.phi_guarded_ordering(),
            ctx.tower_functional_equation(),
            ctx.tower_monotone_chain(),
            ctx.tower_tau_decay(),
            ctx.tower_lambda_comparison(),
            ctx.tower_sublog(),
            ctx.tower_window_shift(),
        ]);
    }
    out.sort_by(|a, b| a.check_id.cmp(&b.check_id));
    Ok(out)
}

/// Worst residual so far, with optional per-point artifacts.
struct Acc {
    worst: f64,
    points: Option<Vec<[f64; 2]>>,
}

impl Acc {
    fn new(cfg: &SuiteConfig) -> Self {
        Acc { worst: 0.0, points: cfg.artifacts.then(Vec::new) }
    }

    /// NaN marks a point whose evaluation failed.
    fn push(&mut self, at: f64, r: f64) {
        let r = if r.is_nan() { f64::INFINITY } else { r };
        self.worst = self.worst.max(r);
        if let Some(p) = &mut self.points {
            p.push([at, r]);
        }
    }

    fn finish(self, id: &str, grid: String, threshold: f64) -> CheckResult {
        CheckResult {
            check_id: id.to_string(),
            grid,
            max_residual: self.worst,
            threshold,
            passed: self.worst <= threshold,
            artifacts: self.points,
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn ok(r: Result<f64>) -> f64 {
    r.unwrap_or(f64::NAN)
}

fn rng_for(cfg: &SuiteConfig, id: &str) -> ChaCha8Rng {
    // FNV-1a keeps per-check streams independent of check order
    let h = id.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    ChaCha8Rng::seed_from_u64(cfg.seed ^ h)
}

/// `lo, lo + step, ...` with `floor((hi - lo) / step) + 1` points.
pub fn span(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| lo + step * i as f64).collect()
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Grid on `[lo, hi]` denser within one unit of `edge`.
pub fn density_grid(lo: f64, hi: f64, edge: Option<f64>, edge_density: usize, interior_density: usize) -> Vec<f64> {
    let split = edge.map_or(lo, |e| (e + 1.0).clamp(lo, hi));
    let mut g = Vec::new();
    if split > lo {
        let n = ((split - lo) * edge_density as f64).ceil() as usize;
        g.extend(linspace(lo, split, n.max(1) + 1));
        g.pop();
    }
    let n = ((hi - split) * interior_density as f64).ceil() as usize;
    g.extend(linspace(split, hi, n.max(1) + 1));
    g
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `l`-th central difference quotient with step `h`.
fn central(f: &dyn Fn(f64) -> f64, t: f64, l: usize, h: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..=l {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binomial(l, i) * f(t + (l as f64 / 2.0 - i as f64) * h);
    }
    acc / h.powi(l as i32)
}

/// Central differences refined by `levels` Richardson steps: the error
/// falls from `O(h^2)` to `O(h^(2 + 2 levels))`.
pub fn central_derivative(f: &dyn Fn(f64) -> f64, t: f64, l: usize, h: f64, levels: usize) -> f64 {
    let mut table: Vec<f64> = (0..=levels).map(|i| central(f, t, l, h / 2f64.powi(i as i32))).collect();
    for j in 1..=levels {
        let w = 4f64.powi(j as i32);
        for i in 0..=levels - j {
            table[i] = (w * table[i + 1] - table[i]) / (w - 1.0);
        }
    }
    table[0]
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Clone, Copy, Debug)]
enum JetOp {
    Exp,
    Ln,
    Ln1p,
    Mul,
    Div,
    Recip,
    Compose,
}

const JET_OPS: [JetOp; 7] = [JetOp::Exp, JetOp::Ln, JetOp::Ln1p, JetOp::Mul, JetOp::Div, JetOp::Recip, JetOp::Compose];

impl JetOp {
    /// Value range for the leading coefficient of the first operand.
    fn first_range(self) -> (f64, f64) {
        match self {
            JetOp::Ln => (0.5, 3.0),
            JetOp::Ln1p => (-0.5, 3.0),
            JetOp::Recip => (0.5, 3.0),
            _ => (-3.0, 3.0),
        }
    }

    fn scalar(self, a: f64, b: f64) -> f64 {
        match self {
            JetOp::Exp => a.exp(),
            JetOp::Ln => a.ln(),
            JetOp::Ln1p => a.ln_1p(),
            JetOp::Mul => a * b,
            JetOp::Div => a / b,
            JetOp::Recip => 1.0 / a,
            JetOp::Compose => (a * a).exp(),
        }
    }

    fn jet(self, a: &Jet, b: &Jet) -> Result<Jet> {
        match self {
            JetOp::Exp => a.exp(),
            JetOp::Ln => a.ln(),
            JetOp::Ln1p => a.ln_1p(),
            JetOp::Mul => a.try_mul(b),
            JetOp::Div => a.div(b),
            JetOp::Recip => a.recip(),
            JetOp::Compose => crate::jet::compose_scalar(|x| (*x * *x).exp(), a),
        }
    }
}

fn random_jet(rng: &mut ChaCha8Rng, lead: (f64, f64), order: usize) -> Jet {
    let mut c = vec![rng.random_range(lead.0..=lead.1)];
    c.extend((0..order).map(|_| rng.random_range(-1.0..=1.0)));
    Jet::from_coeffs(&c).expect("finite coefficients")
}

/// Second operand with its value kept away from zero.
fn random_divisor(rng: &mut ChaCha8Rng, order: usize) -> Jet {
    let mut j = random_jet(rng, (0.5, 3.0), order);
    if rng.random_bool(0.5) {
        j = -j;
    }
    j
}

struct Ctx<'a> {
    tower: &'a Tower,
    cfg: &'a SuiteConfig,
    tet: Option<&'a Tetration>,
}

impl<'a> Ctx<'a> {
    fn level(&self, k: usize) -> Level<'a> {
        self.tower.level(k).expect("level below the top of the tower")
    }

    fn tet(&self) -> &'a Tetration {
        self.tet.expect("level 2 present")
    }

    fn top(&self) -> usize {
        self.tower.max_level()
    }

    fn density(&self, k: usize) -> (usize, usize) {
        let thin = if k >= self.cfg.thin_from_level { 8 } else { 1 };
        ((self.cfg.edge_density / thin).max(1), (self.cfg.interior_density / thin).max(1))
    }

    /// Evaluation interval for level `k`: from just inside the domain edge
    /// (or a few units left for unbounded domains) to where values are
    /// still plain.
    fn interval(&self, k: usize) -> (f64, f64, Option<f64>) {
        match k {
            1 => (-5.0, 5.0, None),
            2 => (-1.95, 2.5, Some(-2.0)),
            3 => (-5.0, 1.5, None),
            _ => {
                let a = self.level(k).params().alpha.unwrap_or(-(k as f64));
                if k.is_multiple_of(2) {
                    (a + 0.05, 1.2, Some(a))
                } else {
                    (-5.0, 1.2, None)
                }
            }
        }
    }

    fn jet_finite_difference(&self) -> CheckResult {
        let id = "jet.finite_difference";
        let mut rng = rng_for(self.cfg, id);
        let mut acc = Acc::new(self.cfg);
        let order = 4;
        let per_op = self.cfg.samples.max(1);
        for (oi, op) in JET_OPS.iter().enumerate() {
            for _ in 0..per_op {
                let a = random_jet(&mut rng, op.first_range(), order);
                let b = random_divisor(&mut rng, order);
                let Ok(out) = op.jet(&a, &b) else {
                    acc.push(oi as f64, f64::NAN);
                    continue;
                };
                let f = |t: f64| op.scalar(t.horner(a.coeffs()), t.horner(b.coeffs()));
                for l in 1..=order {
                    let h = if l <= 2 { 1e-3 } else { 1e-2 };
                    let fd = central_derivative(&f, 0.0, l, h, 1);
                    acc.push(oi as f64, rel(out.derivative(l), fd));
                }
            }
        }
        let grid = format!("{per_op} random jets of order {order} per op (exp, ln, ln_1p, mul, div, recip, compose), |c0| <= 3; steps 1e-3 (l <= 2), 1e-2 (l <= 4)");
        acc.finish(id, grid, 1e-4)
    }

    fn jet_order_zero_projection(&self) -> CheckResult {
        let id = "jet.order_zero_projection";
        let mut rng = rng_for(self.cfg, id);
        let mut acc = Acc::new(self.cfg);
        let order = self.cfg.jet_order.clamp(1, crate::jet::MAX_ORDER);
        for (oi, op) in JET_OPS.iter().enumerate() {
            for _ in 0..self.cfg.samples.max(1) {
                let a = random_jet(&mut rng, op.first_range(), order);
                let b = random_divisor(&mut rng, order);
                let r = match op.jet(&a, &b) {
                    Ok(j) => rel(j.value(), op.scalar(a.value(), b.value())),
                    Err(_) => f64::NAN,
                };
                acc.push(oi as f64, r);
            }
        }
        let grid = format!("{} random jets of order {order} per op", self.cfg.samples.max(1));
        acc.finish(id, grid, 1e-14)
    }

    fn jet_log_exp_inverse(&self) -> CheckResult {
        let id = "jet.log_exp_inverse";
        let mut rng = rng_for(self.cfg, id);
        let mut acc = Acc::new(self.cfg);
        let order = self.cfg.jet_order.clamp(1, crate::jet::MAX_ORDER);
        for i in 0..self.cfg.samples.max(1) {
            let a = random_jet(&mut rng, (-2.0, 2.0), order);
            let r = a.exp().and_then(|e| e.ln()).map(|b| b.max_coeff_distance(&a));
            acc.push(i as f64, r.unwrap_or(f64::NAN));
            let b = random_jet(&mut rng, (0.5, 3.0), order);
            let r = b.ln().and_then(|l| l.exp()).map(|c| c.max_coeff_distance(&b));
            acc.push(i as f64, r.unwrap_or(f64::NAN));
        }
        let grid = format!("{} pairs of random order-{order} jets, values in [-2, 2] and [0.5, 3], other coefficients in [-1, 1]", self.cfg.samples.max(1));
        acc.finish(id, grid, 1e-12)
    }

    fn comp_tail_bound(&self) -> CheckResult {
        let id = "comp.tail_bound";
        let eps = COMPOSITION_THRESHOLD;
        let mut rng = rng_for(self.cfg, id);
        let mut acc = Acc::new(self.cfg);
        let centers = [-2.0, 0.0, 1.0, 2.0];
        for c in centers {
            let region = Region::around(Complex64::new(c, 0.0));
            let fam = ExpShiftFamily::new(region);
            let big_n = match comp::tail_norm_threshold::<Complex64, _>(&fam, eps, comp::INDEX_CAP) {
                Ok(n) => n.max(1),
                Err(_) => {
                    acc.push(c, f64::NAN);
                    continue;
                }
            };
            for _ in 0..self.cfg.samples.max(1) {
                let s = region.center + Complex64::from_polar(rng.random_range(0.0..=1.0f64).sqrt(), rng.random_range(0.0..std::f64::consts::TAU));
                let z = Complex64::from_polar(rng.random_range(0.0..=1.0f64).sqrt(), rng.random_range(0.0..std::f64::consts::TAU));
                let n = big_n + rng.random_range(0..6);
                let m = n + rng.random_range(0..12);
                let r = comp::nest(&fam, &s, n, m, z).map(|v| v.norm());
                acc.push(c, r.unwrap_or(f64::NAN));
            }
        }
        let grid = format!("unit disks about s = -2, 0, 1, 2; {} samples each of s, |z| <= 1, threshold <= n < threshold + 6, n <= m < n + 12", self.cfg.samples.max(1));
        acc.finish(id, grid, eps)
    }

    fn comp_truncation_consistency(&self) -> CheckResult {
        let id = "comp.truncation_consistency";
        let eps = COMPOSITION_THRESHOLD;
        let mut acc = Acc::new(self.cfg);
        let policy = CompPolicy { depth_cap: self.cfg.depth_cap };
        for s in span(-10.0, 2.0, 0.5) {
            let fam = ExpShiftFamily::new(Region::around(Complex64::new(s, 0.0)));
            let a = comp::converge(&fam, &s, 0.0, eps, policy);
            let b = comp::converge(&fam, &s, 0.0, eps / 10.0, policy);
            let r = match (a, b) {
                (Ok((a, _)), Ok((b, _))) => rel(a, b),
                _ => f64::NAN,
            };
            acc.push(s, r);
        }
        acc.finish(id, "phi family, s in [-10, 2] step 0.5, eps = 1e-10 against 1e-11".into(), eps)
    }

    fn comp_delta_decay(&self) -> CheckResult {
        let id = "comp.delta_decay";
        let mut acc = Acc::new(self.cfg);
        acc.worst = f64::NEG_INFINITY;
        for s in [0.0, 1.0] {
            let fam = ExpShiftFamily::new(Region::around(Complex64::new(s, 0.0)));
            let r = comp::successive_deltas(&fam, &s, 0.0, 60).map(|d| delta_slope(&d));
            acc.push(s, r.unwrap_or(f64::NAN));
        }
        acc.finish(id, "s in {0, 1}; least-squares slope of ln|phi_(m+1) - phi_m| over m above the rounding floor".into(), -0.95)
    }

    fn comp_split_associativity(&self) -> CheckResult {
        let id = "comp.split_associativity";
        let mut rng = rng_for(self.cfg, id);
        let mut acc = Acc::new(self.cfg);
        for i in 0..self.cfg.samples.max(1) {
            let s = Complex64::from_polar(2.0 * rng.random_range(0.0..=1.0f64).sqrt(), rng.random_range(0.0..std::f64::consts::TAU));
            let fam = ExpShiftFamily::new(Region::around(s));
            let split = rng.random_range(1..=5);
            let m = split + rng.random_range(1..=20);
            let z = Complex64::new(0.0, 0.0);
            let whole = comp::nest(&fam, &s, 1, m, z);
            let parts = comp::nest(&fam, &s, split + 1, m, z).and_then(|inner| comp::nest(&fam, &s, 1, split, inner));
            let r = match (whole, parts) {
                (Ok(a), Ok(b)) => (a - b).norm() / a.norm().max(1.0),
                _ => f64::NAN,
            };
            acc.push(i as f64, r);
        }
        let grid = format!("{} random s with |s| <= 2, split N in [1, 5], m in [N+1, N+20]", self.cfg.samples.max(1));
        acc.finish(id, grid, 1e-12)
    }

    fn phi_functional_equation(&self) -> CheckResult {
        let id = "phi.functional_equation";
        let mut acc = Acc::new(self.cfg);
        for t in span(-10.0, 6.0, 0.05) {
            acc.push(t, phi::phi_residual(t));
        }
        acc.finish(id, "t in [-10, 6] step 0.05; relative, plain to 2 and one logarithm down beyond".into(), COMPOSITION_THRESHOLD)
    }

    fn phi_monotone_positive(&self) -> CheckResult {
        let id = "phi.monotone_positive";
        let mut acc = Acc::new(self.cfg);
        let mut violations = 0usize;
        let mut prev = f64::NEG_INFINITY;
        for t in span(-10.0, 3.0, 0.01) {
            let v = ok(phi::phi(t, PHI_EPS));
            if !(v > 0.0 && v > prev) {
                violations += 1;
            }
            prev = v;
        }
        acc.push(0.0, violations as f64);
        acc.finish(id, "t in [-10, 3] step 0.01; residual counts violations".into(), 0.0)
    }

    fn phi_complex_functional_equation(&self) -> CheckResult {
        let id = "phi.complex_functional_equation";
        let mut rng = rng_for(self.cfg, id);
        let mut acc = Acc::new(self.cfg);
        for i in 0..100 {
            let s = Complex64::from_polar(2.0 * rng.random_range(0.0..=1.0f64).sqrt(), rng.random_range(0.0..std::f64::consts::TAU));
            acc.push(i as f64, phi::phi_residual_complex(s).unwrap_or(f64::NAN));
        }
        acc.finish(id, "100 seeded points uniform in |s| <= 2".into(), 1e-9)
    }

    fn phi_jet_consistency(&self) -> CheckResult {
        let id = "phi.jet_consistency";
        let mut acc = Acc::new(self.cfg);
        let f = |t: f64| ok(phi::phi(t, PHI_EPS));
        for t in span(-2.0, 1.0, 0.25) {
            let Ok(j) = phi::phi_jet(&Jet::variable(t, 3), PHI_EPS) else {
                acc.push(t, f64::NAN);
                continue;
            };
            for l in 1..=3 {
                let d = j.derivative(l);
                let contour = phi::cauchy_derivative(Complex64::new(t, 0.0), l, 1.0, phi::CAUCHY_NODES).map(|c| c.re);
                acc.push(t, (d - ok(contour)).abs() / d.abs());
                let fd = central_derivative(&f, t, l, 0.05, 2);
                acc.push(t, (d - fd).abs() / d.abs());
            }
        }
        acc.finish(id, "t in [-2, 1] step 0.25, orders 1..3; relative to contour integrals and Richardson-refined central differences".into(), 1e-6)
    }

    fn phi_aux_positive_monotone(&self) -> CheckResult {
        let id = "phi.aux_positive_monotone";
        let mut acc = Acc::new(self.cfg);
        for k in 2..=self.top() {
            let l = self.level(k);
            let w = l.params().window_t;
            let mut violations = 0usize;
            let mut prev: Option<GuardedReal> = None;
            for t in span(w, w + 1.0, 0.05) {
                match l.aux_phi_guarded(t) {
                    Ok(g) => {
                        let positive = g.level() > 0 || g.residual() > 0.0;
                        let rising = prev.is_none_or(|p| p.total_cmp(&g).is_lt());
                        if !(positive && rising) {
                            violations += 1;
                        }
                        prev = Some(g);
                    }
                    Err(_) => violations += 1,
                }
            }
            acc.push(k as f64, violations as f64);
        }
        acc.finish(id, format!("k in 2..={}, t in [T, T+1] step 0.05; residual counts violations", self.top()), 0.0)
    }

    fn phi_guarded_ordering(&self) -> CheckResult {
        let id = "phi.guarded_ordering";
        let mut rng = rng_for(self.cfg, id);
        let mut acc = Acc::new(self.cfg);
        let mut violations = 0usize;
        let n = 8 * self.cfg.samples.max(1);
        let mut plain = Vec::with_capacity(n);
        let mut all = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let x = if rng.random_bool(0.5) {
                rng.random_range(-50.0..50.0)
            } else {
                rng.random_range(0.0..690.0f64).exp()
            };
            plain.push(x);
            let lev = rng.random_range(1..=6u64);
            if let Ok(g) = GuardedReal::new(lev, rng.random_range(1.0..700.0)) {
                all.push(g);
            }
        }
        for w in plain.windows(2) {
            let (a, b) = (GuardedReal::from_plain(w[0]), GuardedReal::from_plain(w[1]));
            match (a, b) {
                (Ok(a), Ok(b)) if a.total_cmp(&b) == w[0].total_cmp(&w[1]) && b.total_cmp(&a) == w[1].total_cmp(&w[0]) => {}
                _ => violations += 1,
            }
        }
        all.extend(plain.iter().filter_map(|&x| GuardedReal::from_plain(x).ok()));
        all.sort_by(|a, b| a.total_cmp(b));
        for w in all.windows(2) {
            if w[0].total_cmp(&w[1]).is_gt() {
                violations += 1;
            }
            if let (Some(a), Some(b)) = (w[0].to_f64(), w[1].to_f64()) {
                if a > b {
                    violations += 1;
                }
            }
        }
        for &x in plain.iter().filter(|x| **x > 1.0 && **x < 700.0) {
            let via_exp = GuardedReal::from_plain(x).and_then(|g| g.exp());
            let direct = GuardedReal::from_plain(x.exp());
            if let (Ok(a), Ok(b)) = (via_exp, direct) {
                if a.relative_gap(&b) > 1e-12 {
                    violations += 1;
                }
            }
        }
        acc.push(0.0, violations as f64);
        acc.finish(id, format!("{n} plain and {n} level-index samples; residual counts violations"), 0.0)
    }

    fn tower_functional_equation(&self) -> CheckResult {
        let id = "tower.functional_equation";
        let mut acc = Acc::new(self.cfg);
        let mut grids = Vec::new();
        for k in 2..=self.top() {
            let (l, lm) = (self.level(k), self.level(k - 1));
            let (lo, hi) = residual_interval(k, l.params());
            grids.push(format!("k={k}: [{lo:.4}, {hi}]"));
            for t in linspace(lo, hi, 200) {
                let r = match (l.eval(t + 1.0), l.eval(t).and_then(|x| lm.eval(x))) {
                    (Ok(a), Ok(b)) => rel(b, a),
                    _ => f64::NAN,
                };
                acc.push(t, r);
            }
        }
        acc.finish(id, format!("200 points per level, {}; relative above 1", grids.join(", ")), INVERSION_THRESHOLD)
    }

    fn tower_ladder(&self) -> CheckResult {
        let id = "tower.ladder";
        let mut acc = Acc::new(self.cfg);
        for k in 1..=self.top() {
            let l = self.level(k);
            for j in 0..k {
                let v = ok(l.eval(-(j as f64)));
                acc.push(k as f64, (v - (1.0 - j as f64)).abs());
            }
        }
        acc.finish(id, format!("k in 1..={}, j in 0..k", self.top()), INVERSION_THRESHOLD)
    }

    fn tower_bijectivity(&self) -> CheckResult {
        let id = "tower.bijectivity";
        let mut rng = rng_for(self.cfg, id);
        let mut acc = Acc::new(self.cfg);
        for k in 1..=self.top() {
            let l = self.level(k);
            let (lo, hi, _) = self.interval(k);
            let x_lo = match (k % 2, l.params().alpha) {
                (1, Some(a)) => a + 0.05,
                _ => -8.0,
            };
            let x_hi = ok(l.eval(hi));
            for _ in 0..self.cfg.samples.max(1) {
                let t = rng.random_range(lo..=hi);
                let r = l.eval(t).and_then(|x| l.inverse(x)).map(|u| rel(u, t));
                acc.push(t, r.unwrap_or(f64::NAN));
                let x = rng.random_range(x_lo..=x_hi.max(x_lo + 1.0));
                let r = l.inverse(x).and_then(|u| l.eval(u)).map(|y| rel(y, x));
                acc.push(x, r.unwrap_or(f64::NAN));
            }
        }
        let grid = format!("{} random t per level in its evaluation interval and as many x in its range, k in 1..={}", self.cfg.samples.max(1), self.top());
        acc.finish(id, grid, INVERSION_THRESHOLD)
    }

    fn tower_monotone_chain(&self) -> CheckResult {
        let id = "tower.monotone_chain";
        let mut acc = Acc::new(self.cfg);
        let mut violations = 0usize;
        let mut count = 0usize;
        for k in 1..=self.top() {
            let l = self.level(k);
            let (lo, hi, edge) = self.interval(k);
            let (de, di) = self.density(k);
            for t in density_grid(lo, hi, edge, de, di) {
                count += 1;
                match l.eval_jet(&Jet::variable(t, 1)) {
                    Ok(j) if j.coeff(1) > 0.0 => {}
                    _ => violations += 1,
                }
            }
        }
        let tet = self.tet();
        for t in span(-0.95, 2.0, 0.05) {
            let r = (|| -> Result<f64> {
                let lhs = tet.eval_jet(&Jet::variable(t - 1.0, 1))?.coeff(1);
                let j = tet.eval_jet(&Jet::variable(t, 1))?;
                Ok((lhs - j.coeff(1) / j.value()).abs() / lhs.abs())
            })();
            acc.push(t, r.unwrap_or(f64::NAN));
        }
        if violations > 0 {
            acc.push(f64::NAN, f64::INFINITY);
        }
        let grid = format!(
            "{count} first-derivative samples on density grids per level (thinned from level {}), chain identity on (-1, 2] step 0.05; {violations} sign violations",
            self.cfg.thin_from_level
        );
        acc.finish(id, grid, 1e-6)
    }

    fn tower_tau_decay(&self) -> CheckResult {
        let id = "tower.tau_decay";
        let mut acc = Acc::new(self.cfg);
        let tet = self.tet();
        let w = tet.window_t();
        let decay = |t: f64| (-t.exp()).exp();
        let sample = |t: f64| -> Result<(f64, f64)> {
            let c = tet.tau_correction(&t)?;
            let d = tet.tau_correction(&Jet::variable(t, 1))?.coeff(1);
            Ok((c.abs(), d.abs()))
        };
        let mut fit = (0.0f64, 0.0f64);
        for t in span(w, w + 1.0, 0.05) {
            match sample(t) {
                Ok((c, d)) => fit = (fit.0.max(c / decay(t)), fit.1.max(d / decay(t))),
                Err(_) => acc.push(t, f64::NAN),
            }
        }
        for t in span(w + 1.05, w + 3.0, 0.05) {
            let r = sample(t).map(|(c, d)| (c / (fit.0 * decay(t))).max(d / (fit.1 * decay(t))));
            acc.push(t, r.unwrap_or(f64::NAN));
        }
        let high = tet
            .tau(&Jet::variable(w + 3.0, self.cfg.jet_order.max(2)))
            .map(|(j, _)| j.coeffs()[2..].iter().fold(0.0f64, |m, c| m.max(c.abs())));
        acc.push(w + 3.0, high.map(|h| h / 1e-10).unwrap_or(f64::NAN));
        let grid = format!(
            "A fitted as the max of |tau - t| e^(e^t) (A = {:.3e}) and |tau' - 1| e^(e^t) (A = {:.3e}) on [T, T+1]; ratios to the bound on (T+1, T+3] step 0.05, and coefficients of order >= 2 at T+3 over 1e-10",
            fit.0, fit.1
        );
        acc.finish(id, grid, 1.0)
    }

    fn tower_lambda_comparison(&self) -> CheckResult {
        let id = "tower.lambda_comparison";
        let mut acc = Acc::new(self.cfg);
        for k in 2..=self.top() {
            let (l, lm) = (self.level(k), self.level(k - 1));
            let w = l.params().window_t;
            for t in span(w, w + 1.0, 0.05) {
                let r = (|| -> Result<f64> {
                    let lam = l.lambda(&t)?.0;
                    let next = l.lambda(&(t + 1.0))?.0;
                    let recip = match l.aux_phi_guarded(t + 1.0) {
                        Ok(g) => g.recip_or_zero(),
                        Err(Error::Unrepresentable) => 0.0,
                        Err(e) => return Err(e),
                    };
                    let ratio = next * recip;
                    let bound = if k == 2 { t + ratio.ln_1p() } else { t + lm.inverse(1.0 + ratio)? };
                    Ok((lam - bound).max(0.0) / bound.abs().max(1.0))
                })();
                acc.push(t, r.unwrap_or(f64::NAN));
            }
        }
        acc.finish(id, format!("k in 2..={}, t in [T, T+1] step 0.05; excess of the left side", self.top()), COMPOSITION_THRESHOLD)
    }

    fn tower_sublog(&self) -> CheckResult {
        let id = "tower.sublog";
        let mut rng = rng_for(self.cfg, id);
        let mut acc = Acc::new(self.cfg);
        let levels: Vec<usize> = (2..=self.top().min(3)).collect();
        for &k in &levels {
            let lm = self.level(k - 1);
            let floor = ok(lm.eval(1.0));
            for _ in 0..self.cfg.samples.max(1) {
                let a = (rng.random_range(floor.ln()..=230.0f64)).exp();
                let b = (rng.random_range(floor.ln()..=230.0f64)).exp();
                let r = (|| -> Result<f64> { Ok((lm.inverse(a * b)? - lm.inverse(a)? - lm.inverse(b)?).max(0.0)) })();
                acc.push(k as f64, r.unwrap_or(f64::NAN));
            }
        }
        let grid = format!("{} log-uniform pairs in [E_(k-1)(1), 1e100] for k in {levels:?}; excess of the left side", self.cfg.samples.max(1));
        acc.finish(id, grid, INVERSION_THRESHOLD)
    }

    fn tower_window_shift(&self) -> CheckResult {
        let id = "tower.window_shift";
        let mut rng = rng_for(self.cfg, id);
        let mut acc = Acc::new(self.cfg);
        let mut skipped = 0usize;
        for k in 2..=self.top() {
            let l = self.level(k);
            let (lo, hi, _) = self.interval(k);
            for _ in 0..self.cfg.samples.max(1) {
                let t = rng.random_range(lo..=hi);
                let Ok(a) = l.eval(t) else {
                    acc.push(t, f64::NAN);
                    continue;
                };
                match l.eval_shifted(t, 1) {
                    Ok(b) => acc.push(t, rel(b, a)),
                    Err(e) if e.is_overflow() => skipped += 1,
                    Err(_) => acc.push(t, f64::NAN),
                }
            }
        }
        let grid = format!(
            "{} random t per level in its evaluation interval, k in 2..={}; {skipped} points skipped where the raised window overflows",
            self.cfg.samples.max(1),
            self.top()
        );
        acc.finish(id, grid, 1e-9)
    }
}

/// Slope of `ln |delta_m|` against `m` over the deltas above rounding.
fn delta_slope(deltas: &[f64]) -> f64 {
    let (xs, ys): (Vec<f64>, Vec<f64>) = deltas
        .iter()
        .enumerate()
        .filter(|(_, d)| **d > 1e-14)
        .map(|(m, d)| ((m + 1) as f64, f64::ln(*d)))
        .unzip();
    if xs.len() < 3 {
        return f64::NAN;
    }
    slope(&xs, &ys)
}

/// Residual grid for the functional equation at level `k`.
pub fn residual_interval(k: usize, p: &HyperOpLevel) -> (f64, f64) {
    match k {
        2 => (-1.95, 1.5),
        3 => (-5.0, 0.9),
        _ => match p.domain_edge() {
            Some(a) => (a + 0.05, 0.5),
            None => (-5.0, 0.5),
        },
    }
}

/// One row of [`derivative_positivity_probe`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityRow {
    pub order: usize,
    /// Smallest sampled `t` from which the derivative stays positive.
    pub onset: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityTable {
    pub k: usize,
    pub rows: Vec<PositivityRow>,
    pub sampled: Vec<f64>,
    pub note: Option<String>,
}

/// Where each derivative of `E_k` up to `max_order` turns and stays
/// positive on `points` samples of `t_range`. Observational only.
pub fn derivative_positivity_probe(level: &Level<'_>, max_order: usize, t_range: (f64, f64), points: usize) -> Result<PositivityTable> {
    if max_order > crate::jet::MAX_ORDER {
        return Err(Error::OrderTooLarge(max_order));
    }
    let mut sampled = Vec::new();
    let mut derivs: Vec<Vec<f64>> = Vec::new();
    let mut note = None;
    for t in linspace(t_range.0, t_range.1, points) {
        match level.eval_jet(&Jet::variable(t, max_order)) {
            Ok(j) if j.is_finite() => {
                sampled.push(t);
                derivs.push((0..=max_order).map(|l| j.derivative(l)).collect());
            }
            other => {
                if sampled.is_empty() {
                    return Err(other.err().unwrap_or(Error::InvalidJet { op: "probe" }));
                }
                note = Some(format!("table truncated at t = {t}: jet evaluation failed"));
                break;
            }
        }
    }
    let rows = (0..=max_order)
        .map(|n| {
            let mut onset = None;
            for (i, d) in derivs.iter().enumerate().rev() {
                if d[n] > 0.0 {
                    onset = Some(sampled[i]);
                } else {
                    break;
                }
            }
            PositivityRow { order: n, onset }
        })
        .collect();
    Ok(PositivityTable { k: level.k(), rows, sampled, note })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionRow {
    pub j: usize,
    /// `max_t |dy_j / dx_j|`: sensitivity of derivative slot `j` to itself.
    pub lambda: f64,
    /// `max_t max_(l > j) |dy_l / dx_j|`: leakage into higher slots.
    pub coupling: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub k: usize,
    pub order: usize,
    pub points: Vec<f64>,
    pub rows: Vec<ContractionRow>,
    pub max_lambda: f64,
    /// Soft flag: every `lambda` below 1.
    pub passed: bool,
}

/// `[T, T+1]` in steps of 0.1.
pub fn window_points(level: &Level<'_>) -> Vec<f64> {
    let w = level.params().window_t;
    span(w, w + 1.0, 0.1)
}

/// Sensitivities of one correction step, by finite differences in each
/// raw-derivative slot of the incoming correction `x = Λ(t+1)` (as a jet
/// in `t`), at each of `points`.
pub fn contraction_report(level: &Level<'_>, order: usize, points: &[f64]) -> Result<ContractionReport> {
    if order > crate::jet::MAX_ORDER {
        return Err(Error::OrderTooLarge(order));
    }
    let h = 1e-6;
    let mut rows: Vec<ContractionRow> = (0..=order).map(|j| ContractionRow { j, lambda: 0.0, coupling: 0.0 }).collect();
    for &t in points {
        let tj = Jet::variable(t, order);
        let (base, _) = level.lambda(&Jet::variable(t + 1.0, order))?;
        let d0: Vec<f64> = (0..=order).map(|l| base.derivative(l)).collect();
        let y0 = level.correction_step(&tj, &base)?;
        for j in 0..=order {
            let mut d = d0.clone();
            d[j] += h;
            let y = level.correction_step(&tj, &Jet::from_derivatives(&d)?)?;
            let g = |l: usize| ((y.derivative(l) - y0.derivative(l)) / h).abs();
            rows[j].lambda = rows[j].lambda.max(g(j));
            for l in j + 1..=order {
                rows[j].coupling = rows[j].coupling.max(g(l));
            }
        }
    }
    let max_lambda = rows.iter().fold(0.0f64, |m, r| m.max(r.lambda));
    Ok(ContractionReport { k: level.k(), order, points: points.to_vec(), rows, max_lambda, passed: max_lambda < 1.0 })
}

/// The suite as a JSON array.
pub fn to_json(results: &[CheckResult]) -> String {
    serde_json::to_string_pretty(results).expect("check results serialize")
}

/// One line per check.
pub fn to_text(results: &[CheckResult]) -> String {
    let mut s = String::new();
    for r in results {
        s.push_str(&format!(
            "{} {:<34} max_residual={:.3e} threshold={:.1e}  {}\n",
            if r.passed { "PASS" } else { "FAIL" },
            r.check_id,
            r.max_residual,
            r.threshold,
            r.grid
        ));
    }
    s
}
