//! Gamma-family special functions and log-domain helpers.

use crate::error::{domain, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const MAX_SERIES_TERMS: usize = 100_000;

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("log_gamma", format!("x must be positive and finite, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

/// Lanczos approximation without argument validation. Callers guarantee `x > 0`.
pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma_unchecked(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma function P(a, x).
pub fn regularized_gamma_p(a: f64, x: f64) -> Result<f64> {
    check_incomplete_args(a, x)?;
    Ok(incomplete_gamma_pair(a, x).0)
}

/// Regularized upper incomplete gamma function Q(a, x) = 1 - P(a, x).
pub fn regularized_gamma_q(a: f64, x: f64) -> Result<f64> {
    check_incomplete_args(a, x)?;
    Ok(incomplete_gamma_pair(a, x).1)
}

fn check_incomplete_args(a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain("regularized_gamma", format!("shape must be positive, got {a}")));
    }
    if !(x >= 0.0) {
        return Err(domain("regularized_gamma", format!("x must be non-negative, got {x}")));
    }
    Ok(())
}

/// Returns (P, Q). Series below x = a + 1, Lentz continued fraction above.
pub(crate) fn incomplete_gamma_pair(a: f64, x: f64) -> (f64, f64) {
    if x == 0.0 {
        return (0.0, 1.0);
    }
    if x.is_infinite() {
        return (1.0, 0.0);
    }
    let ln_prefactor = a * x.ln() - x - ln_gamma_unchecked(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut denom = a;
        for _ in 0..MAX_SERIES_TERMS {
            denom += 1.0;
            term *= x / denom;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        let p = (ln_prefactor + sum.ln()).exp().min(1.0);
        (p, 1.0 - p)
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_SERIES_TERMS {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        let q = (ln_prefactor + h.ln()).exp().min(1.0);
        (1.0 - q, q)
    }
}

/// Quantile of Gamma(shape `a`, rate `rate`): the `x` with P(a, rate x) = q.
pub fn gamma_quantile(a: f64, rate: f64, q: f64) -> Result<f64> {
    check_quantile_args(a, rate)?;
    if !(q > 0.0 && q < 1.0) {
        return Err(domain("gamma_quantile", format!("q must lie in (0,1), got {q}")));
    }
    let y = if q > 0.5 {
        ln_gamma_tail_solve(a, (-q).ln_1p(), true)
    } else {
        ln_gamma_tail_solve(a, q.ln(), false)
    };
    Ok(y.exp() / rate)
}

/// Point `x` with upper-tail mass Q(a, rate x) = `s`. Accurate for tiny `s`.
pub fn gamma_quantile_upper(a: f64, rate: f64, s: f64) -> Result<f64> {
    check_quantile_args(a, rate)?;
    if !(s > 0.0 && s < 1.0) {
        return Err(domain("gamma_quantile_upper", format!("tail mass must lie in (0,1), got {s}")));
    }
    Ok(ln_gamma_tail_solve(a, s.ln(), true).exp() / rate)
}

fn check_quantile_args(a: f64, rate: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain("gamma_quantile", format!("shape must be positive, got {a}")));
    }
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(domain("gamma_quantile", format!("rate must be positive, got {rate}")));
    }
    Ok(())
}

/// Chi-square quantile with `dof` degrees of freedom.
pub fn chi_square_quantile(dof: f64, q: f64) -> Result<f64> {
    gamma_quantile(dof / 2.0, 0.5, q)
}

/// Solves for y = ln x in unit-rate Gamma(a) such that ln Q(a, x) = `target_ln`
/// (`upper`) or ln P(a, x) = `target_ln`. Newton on the log tail probability,
/// safeguarded by a bisection bracket.
fn ln_gamma_tail_solve(a: f64, target_ln: f64, upper: bool) -> f64 {
    let complement = upper;
    let lg = ln_gamma_unchecked(a);
    let eval = |y: f64| -> (f64, f64) {
        let x = y.exp();
        let (p, qq) = incomplete_gamma_pair(a, x);
        let tail = if complement { qq } else { p };
        let ln_tail = tail.ln();
        // d ln(tail) / dy = ± x f(x) / tail
        let ln_xpdf = a * y - x - lg;
        let slope = (ln_xpdf - ln_tail).exp();
        let slope = if complement { -slope } else { slope };
        (ln_tail - target_ln, slope)
    };

    // initial guess
    let mut y = if !upper && target_ln < -1.0 {
        ((target_ln + ln_gamma_unchecked(a + 1.0)) / a).min(a.ln())
    } else if upper && target_ln < -1.0 {
        (a - target_ln).ln()
    } else {
        a.ln()
    };
    if !y.is_finite() {
        y = a.ln();
    }

    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for _ in 0..200 {
        let (f, slope) = eval(y);
        if f.is_nan() {
            // x too extreme for the tail evaluation; step back toward the mean
            y = 0.5 * (y + a.ln());
            continue;
        }
        // f is increasing in y for the lower tail, decreasing for the upper tail
        let too_high = if complement { f < 0.0 } else { f > 0.0 };
        if too_high {
            hi = hi.min(y);
        } else {
            lo = lo.max(y);
        }
        if f.abs() < 1e-15 {
            break;
        }
        let mut next = y - f / slope;
        if !next.is_finite() || next <= lo || next >= hi {
            next = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo + 2.0_f64.max(lo.abs()),
                (false, true) => hi - 2.0_f64.max(hi.abs()),
                (false, false) => y,
            };
        }
        if (next - y).abs() <= 1e-15 * y.abs().max(1.0) {
            y = next;
            break;
        }
        y = next;
    }
    y
}

/// ln(e^a + e^b) without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln Σ e^{v_i}; `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_infinite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// ln(1 + e^y), stable for any y.
pub fn ln1p_exp(y: f64) -> f64 {
    if y > 35.0 {
        y + (-y).exp()
    } else if y < -35.0 {
        y.exp()
    } else {
        y.exp().ln_1p()
    }
}

/// ln(e^v - 1) for v > 0, stable for large and tiny v.
pub fn ln_expm1(v: f64) -> f64 {
    if v > 35.0 {
        v + (-(-v).exp()).ln_1p()
    } else {
        v.exp_m1().ln()
    }
}
