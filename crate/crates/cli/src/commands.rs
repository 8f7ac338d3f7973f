use std::path::PathBuf;

use clap::Args;
use num_complex::Complex64;
use serde_json::{json, Value};

use hyperop::phi::{self, CAUCHY_NODES, PHI_EPS};
use hyperop::verify::{self, SuiteConfig};
use hyperop::{Error, Jet, Level, Tower};

use crate::cache;
use crate::config::{CliConfig, Format, MAX_JET_ORDER};
use crate::error::CliError;
use crate::output::{cell, num, write_file};

pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Level: 1 is exp, 2 is tetration, 3 pentation, ...
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub t: f64,
    /// Also print Taylor coefficients up to this order.
    #[arg(long)]
    pub jet: Option<usize>,
    /// Report the value in level-index form, which never overflows.
    #[arg(long)]
    pub guarded: bool,
    /// Evaluate the inverse at `t` instead.
    #[arg(long)]
    pub inverse: bool,
    /// Overrides --tolerance for this evaluation.
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    #[arg(long)]
    pub step: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Include per-point residuals in the report.
    #[arg(long)]
    pub artifacts: bool,
}

#[derive(Debug, Args)]
pub struct PhiArgs {
    #[arg(long, default_value_t = 0.0)]
    pub re: f64,
    #[arg(long, default_value_t = 0.0)]
    pub im: f64,
    /// `re0,re1,im0,im1,n`: an n by n grid written as CSV.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Derivative order, from a contour integral.
    #[arg(long)]
    pub deriv: Option<usize>,
    /// Contour radius for --deriv.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Also print the functional-equation residual at the point.
    #[arg(long)]
    pub check: bool,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Grid output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json serializes"));
}

fn check_eps(eps: f64) -> Result<f64, CliError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(eps)
    } else {
        Err(CliError::Usage(format!("--eps must lie in (0, 1), got {eps}")))
    }
}

/// Point of the evaluation window that `t` lands on.
fn landing(level: &Level<'_>, t: f64) -> f64 {
    let p = level.params();
    p.window_t + (t + p.omega - p.window_t).rem_euclid(1.0)
}

pub fn eval(cfg: &CliConfig, args: &EvalArgs) -> Result<(), CliError> {
    let mut cfg = cfg.clone();
    if let Some(eps) = args.eps {
        cfg.tolerance = check_eps(eps)?;
    }
    if let Some(n) = args.jet {
        if n > MAX_JET_ORDER {
            return Err(CliError::Usage(format!("--jet must be at most {MAX_JET_ORDER}")));
        }
    }
    let tower = cache::tower(&cfg, args.k)?;
    let level = tower.level(args.k)?;
    let (t, k) = (args.t, args.k);

    let value = if args.guarded {
        None
    } else if args.inverse {
        Some(level.inverse(t)?)
    } else {
        Some(level.eval(t)?)
    };
    let guarded = if args.guarded {
        Some(if args.inverse {
            level.inverse_guarded(&hyperop::GuardedReal::from_plain(t)?)?
        } else {
            level.eval_guarded(t)?
        })
    } else {
        None
    };
    let jet = match args.jet {
        Some(n) if args.inverse => Some(level.inverse_jet(&Jet::variable(t, n))?),
        Some(n) => Some(level.eval_jet(&Jet::variable(t, n))?),
        None => None,
    };

    match cfg.format {
        Format::Text => {
            if let Some(v) = value {
                println!("{}", num(v));
            }
            if let Some(g) = &guarded {
                println!("exp^{}({})", g.level(), num(g.residual()));
            }
            if let Some(j) = &jet {
                println!("jet: {}", j.coeffs().iter().map(|c| num(*c)).collect::<Vec<_>>().join(" "));
            }
        }
        Format::Csv => {
            let mut header = vec!["k".to_string(), "t".into()];
            let mut row = vec![k.to_string(), num(t)];
            if let Some(v) = value {
                header.push("value".into());
                row.push(num(v));
            }
            if let Some(g) = &guarded {
                header.extend(["guarded_level".into(), "guarded_residual".into()]);
                row.extend([g.level().to_string(), num(g.residual())]);
            }
            if let Some(j) = &jet {
                for (l, c) in j.coeffs().iter().enumerate() {
                    header.push(format!("c{l}"));
                    row.push(num(*c));
                }
            }
            println!("{}\n{}", header.join(","), row.join(","));
        }
        Format::Json => {
            let mut out = json!({ "k": k, "t": t, "inverse": args.inverse });
            if let Some(v) = value {
                out["value"] = json!(v);
            }
            if let Some(g) = &guarded {
                out["guarded"] = json!({ "level": g.level(), "residual": g.residual() });
            }
            if let Some(j) = &jet {
                out["jet"] = json!(j.coeffs());
            }
            if k >= 2 && !args.inverse {
                let (_, seq) = level.lambda(&landing(&level, t))?;
                out["convergence"] = serde_json::to_value(seq).expect("report serializes");
            }
            out["params"] = serde_json::to_value(level.params()).expect("params serialize");
            print_json(&out);
        }
    }
    Ok(())
}

struct Row {
    t: f64,
    value: Option<f64>,
    derivative: Option<f64>,
    residual: Option<f64>,
    status: &'static str,
}

fn residual(tower: &Tower, k: usize, t: f64, v: f64) -> Option<f64> {
    let next = tower.level(k).ok()?.eval(t + 1.0).ok()?;
    let lifted = if k == 1 { std::f64::consts::E * v } else { tower.level(k - 1).ok()?.eval(v).ok()? };
    Some((lifted - next).abs() / next.abs().max(1.0))
}

fn table_row(tower: &Tower, k: usize, t: f64) -> Row {
    let level = tower.level(k).expect("level built");
    match level.eval(t) {
        Ok(v) => Row {
            t,
            value: Some(v),
            derivative: level.eval_jet(&Jet::variable(t, 1)).ok().map(|j| j.coeff(1)),
            residual: residual(tower, k, t, v),
            status: "ok",
        },
        Err(e) => {
            let status = match e {
                Error::OutsideDomain { .. } => "outside_domain",
                ref e if e.is_overflow() => "overflow",
                _ => "failed",
            };
            Row { t, value: None, derivative: None, residual: None, status }
        }
    }
}

pub fn table(cfg: &CliConfig, args: &TableArgs) -> Result<(), CliError> {
    if !(args.step > 0.0 && args.step.is_finite()) {
        return Err(CliError::Usage(format!("--step must be positive, got {}", args.step)));
    }
    if !(args.from.is_finite() && args.to.is_finite()) || args.from > args.to {
        return Err(CliError::Usage(format!("empty range: --from {} is above --to {}", args.from, args.to)));
    }
    let grid = verify::span(args.from, args.to, args.step);
    if grid.len() > MAX_GRID_POINTS {
        return Err(CliError::Usage(format!("{} rows exceed the limit of {MAX_GRID_POINTS}", grid.len())));
    }
    let tower = cache::tower(cfg, args.k)?;
    let rows: Vec<Row> = grid.iter().map(|&t| table_row(&tower, args.k, t)).collect();

    let text = if cfg.format == Format::Json {
        let v: Vec<Value> = rows
            .iter()
            .map(|r| json!({ "t": r.t, "value": r.value, "first_derivative": r.derivative, "residual": r.residual, "status": r.status }))
            .collect();
        serde_json::to_string_pretty(&v).expect("json serializes") + "\n"
    } else {
        let mut s = String::from("t,value,first_derivative,residual,status\n");
        for r in &rows {
            s.push_str(&format!("{},{},{},{},{}\n", num(r.t), cell(r.value), cell(r.derivative), cell(r.residual), r.status));
        }
        s
    };
    write_file(&args.out, &text)
}

pub fn verify(cfg: &CliConfig, args: &VerifyArgs) -> Result<bool, CliError> {
    let tower = cache::tower(cfg, cfg.max_level)?;
    let suite = SuiteConfig { seed: cfg.seed, depth_cap: cfg.depth_cap, jet_order: cfg.jet_order, artifacts: args.artifacts, ..SuiteConfig::default() };
    let results = verify::run_suite(&tower.params_list(), &suite).map_err(|e| CliError::Infra(format!("suite: {e}")))?;
    let passed = results.iter().all(|r| r.passed);

    // exploratory probes: reported, never part of the verdict
    let mut positivity = Vec::new();
    let mut contraction = Vec::new();
    for k in 2..=tower.max_level() {
        let level = tower.level(k)?;
        let range = verify::residual_interval(k, level.params());
        match verify::derivative_positivity_probe(&level, cfg.jet_order.min(4), range, 80) {
            Ok(p) => positivity.push(serde_json::to_value(p).expect("probe serializes")),
            Err(e) => eprintln!("warning: positivity probe for k={k} failed: {e}"),
        }
        if k <= 3 {
            match verify::contraction_report(&level, 4, &verify::window_points(&level)) {
                Ok(c) => contraction.push(serde_json::to_value(c).expect("probe serializes")),
                Err(e) => eprintln!("warning: contraction report for k={k} failed: {e}"),
            }
        }
    }
    let report = json!({
        "schema_version": 1,
        "passed": passed,
        "config": { "tolerance": cfg.tolerance, "depth_cap": cfg.depth_cap, "jet_order": cfg.jet_order, "seed": cfg.seed, "max_level": tower.max_level() },
        "levels": tower.params_list(),
        "checks": results,
        "probes": { "derivative_positivity": positivity, "contraction": contraction },
    });
    let report_text = serde_json::to_string_pretty(&report).expect("json serializes") + "\n";
    if let Some(path) = &args.report {
        write_file(path, &report_text)?;
    }
    match cfg.format {
        Format::Json => print!("{report_text}"),
        Format::Csv => {
            println!("check_id,passed,max_residual,threshold");
            for r in &results {
                println!("{},{},{},{}", r.check_id, r.passed, num(r.max_residual), num(r.threshold));
            }
        }
        Format::Text => {
            print!("{}", verify::to_text(&results));
            println!("{} of {} checks passed", results.iter().filter(|r| r.passed).count(), results.len());
        }
    }
    Ok(passed)
}

struct Grid {
    re: (f64, f64),
    im: (f64, f64),
    n: usize,
}

fn parse_grid(text: &str) -> Result<Grid, CliError> {
    let bad = || CliError::Usage(format!("--grid expects re0,re1,im0,im1,n, got {text:?}"));
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 5 {
        return Err(bad());
    }
    let f: Vec<f64> = parts[..4].iter().map(|p| p.parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    if f.iter().any(|x| !x.is_finite()) {
        return Err(bad());
    }
    let n: usize = parts[4].parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    if n.checked_mul(n).is_none_or(|p| p > MAX_GRID_POINTS) {
        return Err(CliError::Usage(format!("grid of {n} x {n} points exceeds the limit of {MAX_GRID_POINTS}")));
    }
    Ok(Grid { re: (f[0], f[1]), im: (f[2], f[3]), n })
}

fn axis((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        vec![lo]
    } else {
        verify::linspace(lo, hi, n)
    }
}

pub fn phi(cfg: &CliConfig, args: &PhiArgs) -> Result<(), CliError> {
    let eps = args.eps.map(check_eps).transpose()?.unwrap_or(PHI_EPS);
    if let Some(text) = &args.grid {
        let g = parse_grid(text)?;
        let mut s = String::from("re,im,abs,arg\n");
        for im in axis(g.im, g.n) {
            for re in axis(g.re, g.n) {
                let (a, b) = match phi::phi_complex(Complex64::new(re, im), eps) {
                    Ok(v) => (Some(v.norm()), Some(v.arg())),
                    Err(_) => (None, None),
                };
                s.push_str(&format!("{},{},{},{}\n", num(re), num(im), cell(a), cell(b)));
            }
        }
        return match &args.out {
            Some(path) => write_file(path, &s),
            None => {
                print!("{s}");
                Ok(())
            }
        };
    }

    let s0 = Complex64::new(args.re, args.im);
    let value = match args.deriv {
        Some(k) => phi::cauchy_derivative(s0, k, args.radius, CAUCHY_NODES)?,
        None if args.im == 0.0 => Complex64::new(phi::phi(args.re, eps)?, 0.0),
        None => phi::phi_complex(s0, eps)?,
    };
    let residual = if !args.check {
        None
    } else if args.im == 0.0 {
        Some(phi::phi_residual(args.re))
    } else {
        Some(phi::phi_residual_complex(s0)?)
    };
    match cfg.format {
        Format::Text => {
            if value.im == 0.0 {
                println!("{}", num(value.re));
            } else {
                println!("{} {}", num(value.re), num(value.im));
            }
            if let Some(r) = residual {
                println!("residual: {}", num(r));
            }
        }
        Format::Csv => {
            println!("re,im,value_re,value_im{}", if residual.is_some() { ",residual" } else { "" });
            let tail = residual.map(|r| format!(",{}", num(r))).unwrap_or_default();
            println!("{},{},{},{}{tail}", num(args.re), num(args.im), num(value.re), num(value.im));
        }
        Format::Json => {
            let mut out = json!({ "s": [args.re, args.im], "value": [value.re, value.im], "abs": value.norm(), "arg": value.arg() });
            if let Some(k) = args.deriv {
                out["deriv"] = json!(k);
            }
            if let Some(r) = residual {
                out["residual"] = json!(r);
            }
            print_json(&out);
        }
    }
    Ok(())
}
