//! Level-index reals: `exp(exp(...(r)))` with the exponential applied
//! `level` times.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Plain doubles at or above this magnitude move to level-index form.
pub const OVERFLOW_GUARD: f64 = 1e300;

/// `ln(OVERFLOW_GUARD)`: the smallest residual allowed above level 0.
pub fn residual_floor() -> f64 {
    OVERFLOW_GUARD.ln()
}

/// A real number stored as `exp^level(residual)`.
///
/// Canonical form: level 0 holds any plain value below the guard; level
/// `n >= 1` keeps the residual in `[ln G, G)` with `G` the guard, so each
/// value has exactly one representation and ordering is lexicographic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuardedReal {
    level: u64,
    residual: f64,
}

impl GuardedReal {
    pub fn from_plain(x: f64) -> Result<Self> {
        Self::new(0, x)
    }

    /// Builds and canonicalizes `exp^level(residual)`.
    pub fn new(level: u64, residual: f64) -> Result<Self> {
        if residual.is_nan() || residual == f64::INFINITY {
            return Err(Error::Unrepresentable);
        }
        let mut g = GuardedReal { level, residual };
        let floor = residual_floor();
        while g.level > 0 && g.residual < floor {
            g.residual = g.residual.exp();
            g.level -= 1;
        }
        while g.residual >= OVERFLOW_GUARD {
            g.residual = g.residual.ln();
            g.level = g.level.checked_add(1).ok_or(Error::Unrepresentable)?;
        }
        Ok(g)
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn is_plain(&self) -> bool {
        self.level == 0
    }

    pub fn to_f64(&self) -> Option<f64> {
        self.is_plain().then_some(self.residual)
    }

    /// The plain value, or `+inf` when above the guard.
    pub fn to_f64_saturating(&self) -> f64 {
        self.to_f64().unwrap_or(f64::INFINITY)
    }

    /// `ln` of the value as a plain double when that fits (level <= 1).
    pub fn ln_f64(&self) -> Option<f64> {
        match self.level {
            0 if self.residual > 0.0 => Some(self.residual.ln()),
            1 => Some(self.residual),
            _ => None,
        }
    }

    pub fn exp(&self) -> Result<Self> {
        if self.level == 0 {
            if self.residual < residual_floor() {
                return Ok(GuardedReal { level: 0, residual: self.residual.exp() });
            }
            return Ok(GuardedReal { level: 1, residual: self.residual });
        }
        let level = self.level.checked_add(1).ok_or(Error::Unrepresentable)?;
        Ok(GuardedReal { level, residual: self.residual })
    }

    /// `n` chained exponentials; constant time once the value is huge.
    pub fn exp_n(&self, mut n: u64) -> Result<Self> {
        let mut g = *self;
        while n > 0 && g.level == 0 {
            g = g.exp()?;
            n -= 1;
        }
        g.level = g.level.checked_add(n).ok_or(Error::Unrepresentable)?;
        Ok(g)
    }

    pub fn ln(&self) -> Result<Self> {
        match self.level {
            0 if self.residual > 0.0 => Ok(GuardedReal { level: 0, residual: self.residual.ln() }),
            0 => Err(Error::Domain { op: "ln", x: self.residual }),
            l => Ok(GuardedReal { level: l - 1, residual: self.residual }),
        }
    }

    /// Adds a plain real. At level 1 this is `r + ln_1p(c e^-r)`; from
    /// level 2 on the shift is below the residual's resolution.
    pub fn add_plain(&self, c: f64) -> Result<Self> {
        match self.level {
            0 => Self::new(0, self.residual + c),
            1 => {
                let rel = c * (-self.residual).exp();
                if rel <= -1.0 {
                    return Err(Error::Domain { op: "add", x: c });
                }
                Self::new(1, self.residual + rel.ln_1p())
            }
            _ => Ok(*self),
        }
    }

    /// Multiplies by `e^s`.
    pub fn mul_exp(&self, s: f64) -> Result<Self> {
        if self.level == 0 {
            let p = self.residual * s.exp();
            if p.is_finite() {
                return Self::new(0, p);
            }
        }
        if self.level == 0 && self.residual <= 0.0 {
            return Err(Error::Domain { op: "mul_exp", x: self.residual });
        }
        self.ln()?.add_plain(s)?.exp()
    }

    /// Multiplies by a positive plain real.
    pub fn mul_plain(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::Domain { op: "mul", x: c });
        }
        self.mul_exp(c.ln())
    }

    /// `1/x`, with anything above the guard treated as exactly zero.
    pub fn recip_or_zero(&self) -> f64 {
        if self.level == 0 {
            1.0 / self.residual
        } else {
            0.0
        }
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.level
            .cmp(&other.level)
            .then(self.residual.total_cmp(&other.residual))
    }

    /// Relative mismatch of two guarded values: compared at the common top
    /// level, or 1 when their levels differ.
    pub fn relative_gap(&self, other: &Self) -> f64 {
        if self.level != other.level {
            return 1.0;
        }
        (self.residual - other.residual).abs() / self.residual.abs().max(other.residual.abs()).max(1.0)
    }
}

impl PartialOrd for GuardedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.total_cmp(other))
    }
}

impl fmt::Display for GuardedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.level == 0 {
            write!(f, "{:.17e}", self.residual)
        } else {
            write!(f, "exp^{}({:.17e})", self.level, self.residual)
        }
    }
}
