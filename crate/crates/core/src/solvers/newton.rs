use alloc::format;

use crate::error::{Error, Result};

pub const NEWTON_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOutcome {
    pub root: f64,
    pub iterations: usize,
}

/// Root of an increasing `h` on `[lo, hi]`; `h` returns value and derivative.
pub fn guarded_newton(h: impl Fn(f64) -> (f64, f64), lo: f64, hi: f64, tol: f64) -> Result<f64> {
    guarded_newton_traced(h, lo, hi, tol).map(|o| o.root)
}

/// [`guarded_newton`] with the iteration count.
///
/// Newton steps are taken from the current iterate; a step that leaves the
/// bracket or does not at least halve the previous step is replaced by
/// bisection. Returns once `|h| ≤ tol` or the bracket is a few ulps wide.
pub fn guarded_newton_traced(
    h: impl Fn(f64) -> (f64, f64),
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<NewtonOutcome> {
    if !(lo <= hi) || !(tol >= 0.0) {
        return Err(Error::invalid(format!("bad bracket [{lo:e}, {hi:e}] or tolerance {tol:e}")));
    }
    let (flo, _) = h(lo);
    let (fhi, _) = h(hi);
    if !(flo <= 0.0 && fhi >= 0.0) {
        return Err(Error::invalid(format!(
            "no sign change on [{lo:e}, {hi:e}]: h(lo) = {flo:e}, h(hi) = {fhi:e}"
        )));
    }
    let done = |root, iterations| Ok(NewtonOutcome { root, iterations });
    if flo.abs() <= tol {
        return done(lo, 0);
    }
    if fhi.abs() <= tol {
        return done(hi, 0);
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut x = if -flo < fhi { lo } else { hi };
    let mut dx_old = hi - lo;
    let mut dx = dx_old;
    let (mut f, mut df) = h(x);
    for k in 1..=NEWTON_MAX_ITER {
        let newton = x - f / df;
        let inside = newton > lo && newton < hi && newton.is_finite();
        if inside && (2.0 * f).abs() <= (dx_old * df).abs() {
            dx_old = dx;
            dx = f / df;
            x = newton;
        } else {
            dx_old = dx;
            dx = 0.5 * (hi - lo);
            x = lo + dx;
        }
        let (fx, dfx) = h(x);
        f = fx;
        df = dfx;
        if f.abs() <= tol {
            return done(x, k);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let ulps = 4.0 * f64::EPSILON * libm::fmax(lo.abs(), hi.abs());
        if hi - lo <= ulps {
            return done(x, k);
        }
    }
    Err(Error::NotConverged {
        iterations: NEWTON_MAX_ITER,
        residual: f.abs(),
    })
}
