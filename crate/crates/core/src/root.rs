//! Root finding for increasing functions of one real variable.

use crate::error::{Error, Result};

/// Cap on bracket expansions.
pub const EXPANSION_CAP: usize = 60;

const ITERATION_CAP: usize = 200;

/// Solves `f(x) = y` for increasing `f`, starting from the guess bracket
/// `[lo, hi]`. `f` may return `+inf` / `-inf` where it leaves the
/// representable range; those count as sign information.
///
/// The bracket is widened geometrically (up to [`EXPANSION_CAP`] times),
/// then narrowed by an Illinois false-position iteration with bisection
/// fallback until the width is below `xtol`.
pub fn solve_increasing<F>(mut f: F, y: f64, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo < hi) {
        return Err(Error::Root(format!("empty bracket [{lo}, {hi}]")));
    }
    let mut flo = f(lo)? - y;
    let mut fhi = f(hi)? - y;
    let mut width = hi - lo;
    let mut n = 0;
    while flo > 0.0 {
        n += 1;
        if n > EXPANSION_CAP {
            return Err(Error::Root(format!("no lower bracket for {y}")));
        }
        hi = lo;
        fhi = flo;
        lo -= width;
        width *= 2.0;
        flo = f(lo)? - y;
    }
    while fhi < 0.0 {
        n += 1;
        if n > EXPANSION_CAP {
            return Err(Error::Root(format!("no upper bracket for {y}")));
        }
        lo = hi;
        flo = fhi;
        hi += width;
        width *= 2.0;
        fhi = f(hi)? - y;
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    illinois(&mut f, y, lo, flo, hi, fhi, xtol)
}

fn illinois<F>(f: &mut F, y: f64, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    // fa < 0 < fb throughout
    let mut side = 0i8;
    for _ in 0..ITERATION_CAP {
        if b - a <= xtol.max(f64::EPSILON * a.abs().max(b.abs())) {
            break;
        }
        let mut x = if fa.is_finite() && fb.is_finite() {
            b - fb * (b - a) / (fb - fa)
        } else {
            f64::NAN
        };
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let fx = f(x)? - y;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

/// Bisection on `[lo, hi]` (which must bracket `y`) down to `width`, then a
/// single secant step through the final endpoints. The bracket invariant
/// `f(lo) < y < f(hi)` is enforced at every step.
pub fn bisect_then_secant<F>(mut f: F, y: f64, mut lo: f64, mut hi: f64, width: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut flo = f(lo)? - y;
    let mut fhi = f(hi)? - y;
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::Root(format!("[{lo}, {hi}] does not bracket {y}")));
    }
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)? - y;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
        debug_assert!(flo < 0.0 && fhi > 0.0);
    }
    let x = lo - flo * (hi - lo) / (fhi - flo);
    Ok(if x.is_finite() && x >= lo && x <= hi { x } else { 0.5 * (lo + hi) })
}
