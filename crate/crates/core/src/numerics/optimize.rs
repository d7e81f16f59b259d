//! Scalar minimization and root finding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance on the argument for [`minimize_scalar`].
pub const DEFAULT_ARG_TOL: f64 = 1e-6;

const GOLDEN: f64 = 0.381_966_011_250_105_1; // (3 - √5) / 2
const MAX_EVALUATIONS: usize = 500;

/// Outcome of a bracketed one-dimensional minimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketedMinimum {
    pub argmin: f64,
    pub min_value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Brent's method: golden-section steps combined with successive parabolic
/// interpolation. Non-finite objective values are treated as worse than any
/// finite one.
pub fn minimize_scalar<F>(mut f: F, lower: f64, upper: f64, tol: f64) -> Result<BracketedMinimum>
where
    F: FnMut(f64) -> f64,
{
    if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
        return Err(Error::Solver(format!("invalid bracket [{lower}, {upper}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::Solver(format!("tolerance must be positive, got {tol}")));
    }
    let mut eval = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let (mut a, mut b) = (lower, upper);
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = eval(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut evaluations = 1;
    let (mut d, mut e) = (0.0_f64, 0.0_f64);

    // best point seen so far, in case the budget runs out
    let mut converged = false;
    while evaluations < MAX_EVALUATIONS {
        let xm = 0.5 * (a + b);
        let tol1 = 1e-10 * x.abs() + tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            converged = true;
            break;
        }
        let mut golden_step = true;
        if e.abs() > tol1 && fx.is_finite() && fw.is_finite() && fv.is_finite() {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                golden_step = false;
            }
        }
        if golden_step {
            e = if x >= xm { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = eval(u);
        evaluations += 1;
        if fu < fx || (fu == fx && fu.is_finite()) {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Ok(BracketedMinimum {
        argmin: x,
        min_value: fx,
        evaluations,
        converged,
    })
}

/// Newton-Raphson root finder for `f` with derivative `df`.
///
/// When `bracket` is supplied and `f` changes sign across it, any Newton step
/// that leaves the current sign-change interval is replaced by bisection.
/// Stops once `|f(x)| <= tol` or the bracket has shrunk to machine precision.
pub fn newton_root<F, D>(
    mut f: F,
    mut df: D,
    x0: f64,
    bracket: Option<(f64, f64)>,
    tol: f64,
) -> Result<f64>
where
    F: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    const MAX_ITER: usize = 200;
    let mut sign_change = None;
    if let Some((lo, hi)) = bracket {
        if !(lo < hi) {
            return Err(Error::Solver(format!("invalid bracket [{lo}, {hi}]")));
        }
        let (flo, fhi) = (f(lo), f(hi));
        if flo.abs() <= tol {
            return Ok(lo);
        }
        if fhi.abs() <= tol {
            return Ok(hi);
        }
        if flo.signum() != fhi.signum() {
            sign_change = Some((lo, hi, flo < 0.0));
        }
    }

    let mut x = x0;
    if let Some((lo, hi, _)) = sign_change {
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
    }
    for _ in 0..MAX_ITER {
        let fx = f(x);
        if !fx.is_finite() {
            return Err(Error::Solver(format!("non-finite function value at x = {x}")));
        }
        if fx.abs() <= tol {
            return Ok(x);
        }
        if let Some((lo, hi, rising)) = sign_change.as_mut() {
            // keep the sign change inside [lo, hi]
            if (fx < 0.0) == *rising {
                *lo = x;
            } else {
                *hi = x;
            }
            if (*hi - *lo) <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
                return Ok(x);
            }
        }
        let slope = df(x);
        let mut next = x - fx / slope;
        if let Some((lo, hi, _)) = sign_change {
            if !next.is_finite() || next <= lo || next >= hi {
                next = 0.5 * (lo + hi);
            }
        } else if !next.is_finite() {
            return Err(Error::Solver(format!("zero derivative at x = {x} and no bracket")));
        }
        if next == x {
            return Ok(x);
        }
        x = next;
    }
    if sign_change.is_some() {
        Ok(x)
    } else {
        Err(Error::Solver(format!(
            "Newton iteration did not converge from x0 = {x0} (last x = {x})"
        )))
    }
}
