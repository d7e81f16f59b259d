use serde::{Deserialize, Serialize};

use super::data::CensoredSample;
use crate::error::{Error, Result};
use crate::numerics::log_sum_exp;

/// Weibull maximum likelihood fit with observed-information standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleFit {
    pub eta: f64,
    pub beta: f64,
    pub sd_eta: f64,
    pub sd_beta: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
}

struct Profile<'a> {
    ln_t: &'a [f64],
    r: f64,
    sum_ln_fail: f64,
}

impl Profile<'_> {
    fn weights(&self, beta: f64) -> (Vec<f64>, f64) {
        let v: Vec<f64> = self.ln_t.iter().map(|l| beta * l).collect();
        let ln_s0 = log_sum_exp(&v);
        (v.iter().map(|x| (x - ln_s0).exp()).collect(), ln_s0)
    }

    /// Profile score and its derivative in β.
    fn score(&self, beta: f64) -> (f64, f64) {
        let (w, _) = self.weights(beta);
        let m1: f64 = w.iter().zip(self.ln_t).map(|(w, l)| w * l).sum();
        let var: f64 = w.iter().zip(self.ln_t).map(|(w, l)| w * (l - m1).powi(2)).sum();
        (
            self.r / beta + self.sum_ln_fail - self.r * m1,
            -self.r / (beta * beta) - self.r * var,
        )
    }
}

fn fit_error(message: &str, trace: Vec<f64>) -> Error {
    Error::Fit {
        message: message.into(),
        trace,
    }
}

pub fn fit_mle(data: &CensoredSample) -> Result<MleFit> {
    let r = data.r();
    if r == 0 {
        return Err(fit_error("no observed failures", Vec::new()));
    }
    let stats = data.stats();
    let ln_t: Vec<f64> = data.times().iter().map(|t| t.ln()).collect();
    let p = Profile {
        ln_t: &ln_t,
        r: r as f64,
        sum_ln_fail: stats.sum_ln_failures,
    };
    let (mut lo, mut hi) = (1e-3, 1.0);
    while p.score(hi).0 > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e4 {
            return Err(fit_error("profile score stays positive; the shape estimate diverges", vec![lo, hi]));
        }
    }
    if p.score(lo).0 <= 0.0 {
        return Err(fit_error("profile score is non-positive near zero shape", vec![lo]));
    }
    let mut beta = 0.5 * (lo + hi);
    let mut iterations = 0;
    let mut trace = vec![beta];
    loop {
        iterations += 1;
        let (g, dg) = p.score(beta);
        if g > 0.0 {
            lo = beta;
        } else {
            hi = beta;
        }
        let mut next = beta - g / dg;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - beta).abs() <= 1e-13 * beta || hi - lo <= 1e-14 * hi;
        beta = next;
        trace.push(beta);
        if done {
            break;
        }
        if iterations > 200 {
            return Err(fit_error("Newton iteration did not settle", trace));
        }
    }

    let (w, ln_s0) = p.weights(beta);
    let rf = r as f64;
    let ln_eta = (ln_s0 - rf.ln()) / beta;
    let eta = ln_eta.exp();
    let d1: f64 = w.iter().zip(&ln_t).map(|(w, l)| w * (l - ln_eta)).sum();
    let d2: f64 = w.iter().zip(&ln_t).map(|(w, l)| w * (l - ln_eta).powi(2)).sum();
    let i_ee = rf * beta * beta / (eta * eta);
    let i_bb = rf / (beta * beta) + rf * d2;
    let i_eb = -rf * beta / eta * d1;
    let det = i_ee * i_bb - i_eb * i_eb;
    if !(det > 0.0) {
        return Err(fit_error("observed information is not positive definite", trace));
    }
    let log_likelihood = rf * beta.ln() - rf * beta * ln_eta + (beta - 1.0) * stats.sum_ln_failures - rf;
    Ok(MleFit {
        eta,
        beta,
        sd_eta: (i_bb / det).sqrt(),
        sd_beta: (i_ee / det).sqrt(),
        log_likelihood,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::data::field_returns;

    fn loglik(d: &CensoredSample, eta: f64, beta: f64) -> f64 {
        d.times()
            .iter()
            .zip(d.events())
            .map(|(&t, &e)| {
                let z = (t / eta).powf(beta);
                if e {
                    beta.ln() - eta.ln() + (beta - 1.0) * (t / eta).ln() - z
                } else {
                    -z
                }
            })
            .sum()
    }

    #[test]
    fn field_returns_fit_is_a_stationary_point() {
        let d = field_returns();
        let f = fit_mle(&d).unwrap();
        assert!((f.log_likelihood - loglik(&d, f.eta, f.beta)).abs() < 1e-9);
        for &(de, db) in &[(1.0, 0.0), (-1.0, 0.0), (0.0, 0.05), (0.0, -0.05)] {
            assert!(loglik(&d, f.eta + de, f.beta + db) < f.log_likelihood);
        }
    }

    #[test]
    fn information_matches_finite_differences() {
        let d = field_returns();
        let f = fit_mle(&d).unwrap();
        let (he, hb) = (1e-3 * f.eta, 1e-4 * f.beta);
        let l = |e, b| loglik(&d, e, b);
        let l0 = l(f.eta, f.beta);
        let iee = -(l(f.eta + he, f.beta) - 2.0 * l0 + l(f.eta - he, f.beta)) / (he * he);
        let ibb = -(l(f.eta, f.beta + hb) - 2.0 * l0 + l(f.eta, f.beta - hb)) / (hb * hb);
        let ieb = -(l(f.eta + he, f.beta + hb) - l(f.eta + he, f.beta - hb) - l(f.eta - he, f.beta + hb)
            + l(f.eta - he, f.beta - hb))
            / (4.0 * he * hb);
        let det = iee * ibb - ieb * ieb;
        assert!(((ibb / det).sqrt() / f.sd_eta - 1.0).abs() < 1e-3);
        assert!(((iee / det).sqrt() / f.sd_beta - 1.0).abs() < 1e-3);
    }

    #[test]
    fn no_failures() {
        let d = CensoredSample::from_parts(&[], &[1.0, 2.0]).unwrap();
        assert!(matches!(fit_mle(&d), Err(Error::Fit { .. })));
    }
}
