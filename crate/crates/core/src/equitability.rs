//! Calibration of the exponential sub-model's virtual size so that it carries
//! the same prior predictive information as a calibrated Weibull prior, and
//! Bayes factors between the two.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elicitation::{ln_k_unchecked, prior_beta_sample, JointPrior, McEstimate, QuantileSpec};
use crate::error::{domain, Error, Result};
use crate::numerics::{
    ln_expm1, ln_gamma_unchecked, log_add_exp, log_sum_exp, newton_root, RandomStream,
};
use crate::posterior::{ln_eta_marginal_likelihood, CensoredSample};

/// Exponential model prior: the β ≡ 1 case, λ ~ Gamma(m_E, b) with b = k_α(m_E) t_α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialPrior {
    pub m_e: f64,
    pub t_alpha: f64,
    pub alpha: f64,
}

impl ExponentialPrior {
    pub fn new(m_e: f64, mts: QuantileSpec) -> Result<Self> {
        if !(m_e > 0.0) || !m_e.is_finite() {
            return Err(domain("exponential_prior", format!("m_e must be positive, got {m_e}")));
        }
        mts.validate()?;
        Ok(Self {
            m_e,
            t_alpha: mts.t,
            alpha: mts.alpha,
        })
    }

    pub fn ln_b(&self) -> f64 {
        ln_k_unchecked(self.m_e, self.alpha) + self.t_alpha.ln()
    }

    /// Marginal likelihood of censored data (closed form).
    pub fn ln_marginal_likelihood(&self, data: &CensoredSample) -> f64 {
        let m = self.m_e;
        let r = data.r() as f64;
        let total: f64 = data.times().iter().sum();
        let lb = self.ln_b();
        let lbt = if data.n() == 0 { lb } else { log_add_exp(lb, total.ln()) };
        m * lb + ln_gamma_unchecked(m + r) - ln_gamma_unchecked(m) - (m + r) * lbt
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(domain("exponential_predictive", format!("t must be non-negative, got {t}")));
    }
    Ok(())
}

fn ln_pdf_parts(m: f64, ln_b: f64, t: f64) -> f64 {
    m.ln() + m * ln_b - (m + 1.0) * log_add_exp(ln_b, t.ln())
}

/// Lomax-form predictive density m b^m / (b + t)^{m+1}.
pub fn exponential_predictive_pdf(t: f64, p: &ExponentialPrior) -> Result<f64> {
    check_time(t)?;
    Ok(ln_pdf_parts(p.m_e, p.ln_b(), t).exp())
}

/// 1 − (b / (b + t))^m.
pub fn exponential_predictive_cdf(t: f64, p: &ExponentialPrior) -> Result<f64> {
    check_time(t)?;
    let lb = p.ln_b();
    Ok(-(p.m_e * (lb - log_add_exp(lb, t.ln()))).exp_m1())
}

/// d/dm of ln f_E(t | m) with b = k_α(m) t_α.
fn d_ln_pdf_dm(m: f64, c: f64, ln_t_alpha: f64, ln_t: f64) -> f64 {
    let lk = -ln_expm1(c / m);
    let dlk = (c / (m * m)) / -(-c / m).exp_m1();
    let lb = lk + ln_t_alpha;
    let lbt = log_add_exp(lb, ln_t);
    1.0 / m + lb + m * dlk - lbt - (m + 1.0) * dlk * (lb - lbt).exp()
}

/// Monte Carlo sizes and search range of the m_E calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EquitabilityOptions {
    /// Predictive draws T_j (Latin hypercube over the shape and the conditional lifetime).
    pub mc_size: usize,
    /// Shape draws in the Rao-Blackwellized density estimate.
    pub rb_size: usize,
    pub m_min: f64,
    pub m_max: f64,
    pub curve_points: usize,
}

impl Default for EquitabilityOptions {
    fn default() -> Self {
        Self {
            mc_size: 50_000,
            rb_size: 1_000,
            m_min: 0.05,
            m_max: 200.0,
            curve_points: 40,
        }
    }
}

/// One fixed draw from the Weibull prior predictive, with f̂_W evaluated at each point.
#[derive(Debug, Clone)]
pub struct PredictiveSample {
    mts: QuantileSpec,
    ln_times: Vec<f64>,
    ln_fw: Vec<f64>,
}

impl PredictiveSample {
    pub fn draw<P: JointPrior + Sync + ?Sized>(
        prior: &P,
        mts: QuantileSpec,
        mc_size: usize,
        rb_size: usize,
        rng: &mut RandomStream,
    ) -> Result<Self> {
        if mc_size == 0 || rb_size == 0 {
            return Err(domain("predictive_sample", "sample sizes must be positive"));
        }
        let m = prior.virtual_size();
        let law = prior.beta_prior()?;
        let design = rng.latin_hypercube(mc_size, 2);
        let ln_times = design
            .iter()
            .map(|point| {
                let (u1, u2) = (point[0], point[1]);
                let beta = law.quantile(u1)?;
                let ln_x = ln_expm1(-(-u2).ln_1p() / m);
                Ok((prior.ln_b(beta) + ln_x) / beta)
            })
            .collect::<Result<Vec<f64>>>()?;

        let mut rb_rng = rng.substream(1);
        let rb_betas = prior_beta_sample(prior, rb_size, &mut rb_rng)?;
        let rb: Vec<(f64, f64)> = rb_betas.iter().map(|&b| (b, prior.ln_b(b))).collect();
        let ln_m = m.ln();
        let ln_n2 = (rb_size as f64).ln();
        let ln_fw = ln_times
            .par_iter()
            .map(|&lt| {
                let terms: Vec<f64> = rb
                    .iter()
                    .map(|&(b, lb)| {
                        let z = b * lt;
                        ln_m + m * lb + b.ln() - lt + z - (m + 1.0) * log_add_exp(lb, z)
                    })
                    .collect();
                log_sum_exp(&terms) - ln_n2
            })
            .collect();
        Ok(Self { mts, ln_times, ln_fw })
    }

    pub fn len(&self) -> usize {
        self.ln_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_times.is_empty()
    }

    fn ln_fe(&self, m_e: f64) -> impl Iterator<Item = f64> + '_ {
        let lb = ln_k_unchecked(m_e, self.mts.alpha) + self.mts.t.ln();
        let lm = m_e.ln();
        self.ln_times.iter().map(move |&lt| lm + m_e * lb - (m_e + 1.0) * log_add_exp(lb, lt))
    }

    /// KL(f_W, f_E(· | m_e)) with its Monte Carlo standard error.
    pub fn kl(&self, m_e: f64) -> McEstimate {
        let diffs: Vec<f64> = self.ln_fw.iter().zip(self.ln_fe(m_e)).map(|(w, e)| w - e).collect();
        McEstimate::from_values(&diffs)
    }

    /// d KL / d m_e on the fixed sample.
    pub fn kl_derivative(&self, m_e: f64) -> f64 {
        let c = -(-self.mts.alpha).ln_1p();
        let lta = self.mts.t.ln();
        let s: f64 = self.ln_times.iter().map(|&lt| d_ln_pdf_dm(m_e, c, lta, lt)).sum();
        -s / self.len() as f64
    }
}

fn mts_of<P: JointPrior + ?Sized>(prior: &P) -> Result<QuantileSpec> {
    prior.common_mts().ok_or_else(|| {
        Error::Incompatible("experts do not share a most trustworthy statement; the exponential prior needs one".into())
    })
}

/// KL divergence between the Weibull prior predictive and the exponential one at `m_e`.
pub fn kl_weibull_vs_exponential<P: JointPrior + Sync + ?Sized>(
    prior: &P,
    m_e: f64,
    mc_size: usize,
    rng: &mut RandomStream,
) -> Result<McEstimate> {
    if !(m_e > 0.0) {
        return Err(domain("kl_weibull_vs_exponential", format!("m_e must be positive, got {m_e}")));
    }
    let rb = EquitabilityOptions::default().rb_size;
    let sample = PredictiveSample::draw(prior, mts_of(prior)?, mc_size, rb, rng)?;
    Ok(sample.kl(m_e))
}

/// Outcome of the m_E calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquitabilityResult {
    pub m_e_star: f64,
    pub kl_star: f64,
    pub kl_std_error: f64,
    /// True when the minimizer is not inside the search range.
    pub at_boundary: bool,
    pub kl_curve: Vec<(f64, f64)>,
    pub mc_size: usize,
    pub rb_size: usize,
    pub diagnostics: Vec<String>,
}

/// Minimizes KL(f_W, f_E(· | m_E)) over m_E by Newton iterations on the
/// derivative, on a single predictive sample.
pub fn calibrate_m_e<P: JointPrior + Sync + ?Sized>(
    prior: &P,
    opts: &EquitabilityOptions,
    rng: &mut RandomStream,
) -> Result<EquitabilityResult> {
    if !(opts.m_min > 0.0 && opts.m_max > opts.m_min) || opts.curve_points < 2 {
        return Err(domain("calibrate_m_e", "bad search range"));
    }
    let sample = PredictiveSample::draw(prior, mts_of(prior)?, opts.mc_size, opts.rb_size, rng)?;
    let (lo, hi) = (opts.m_min, opts.m_max);
    let n = opts.curve_points;
    let kl_curve: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let m = (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp();
            (m, sample.kl(m).value)
        })
        .collect();

    let d = |m: f64| sample.kl_derivative(m);
    let d2 = |m: f64| {
        let h = 1e-4 * m;
        (d(m + h) - d(m - h)) / (2.0 * h)
    };
    let mut diagnostics = Vec::new();
    let (m_star, at_boundary) = if d(hi) < 0.0 {
        diagnostics.push(format!("KL still decreasing at m_E = {hi}; the minimizer lies beyond the search range"));
        (hi, true)
    } else if d(lo) > 0.0 {
        diagnostics.push(format!("KL increasing from m_E = {lo}; the minimizer lies below the search range"));
        (lo, true)
    } else {
        let x0 = kl_curve
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|p| p.0)
            .unwrap_or(1.0);
        (newton_root(d, d2, x0, Some((lo, hi)), 1e-13)?, false)
    };
    let kl = sample.kl(m_star);
    Ok(EquitabilityResult {
        m_e_star: m_star,
        kl_star: kl.value,
        kl_std_error: kl.std_error,
        at_boundary,
        kl_curve,
        mc_size: opts.mc_size,
        rb_size: opts.rb_size,
        diagnostics,
    })
}

/// ln of the Weibull-model marginal likelihood, averaging the η-integrated
/// likelihood over a stratified prior shape sample.
pub fn log_marginal_likelihood_weibull<P: JointPrior + ?Sized>(
    prior: &P,
    data: &CensoredSample,
    mc_size: usize,
    rng: &mut RandomStream,
) -> Result<f64> {
    if mc_size == 0 {
        return Err(domain("log_marginal_likelihood", "mc_size must be positive"));
    }
    if data.n() == 0 {
        return Ok(0.0);
    }
    let stats = data.stats();
    let betas = prior_beta_sample(prior, mc_size, rng)?;
    let terms: Vec<f64> = betas.iter().map(|&b| ln_eta_marginal_likelihood(b, prior, &stats)).collect();
    let v = log_sum_exp(&terms) - (mc_size as f64).ln();
    if !v.is_finite() {
        return Err(Error::Inference("marginal likelihood underflowed".into()));
    }
    Ok(v)
}

/// Either of the two competing models.
#[derive(Debug, Clone, Copy)]
pub enum Model<'a, P: JointPrior + ?Sized> {
    Weibull(&'a P),
    Exponential(&'a ExponentialPrior),
}

pub fn log_marginal_likelihood<P: JointPrior + ?Sized>(
    model: Model<'_, P>,
    data: &CensoredSample,
    mc_size: usize,
    rng: &mut RandomStream,
) -> Result<f64> {
    match model {
        Model::Weibull(p) => log_marginal_likelihood_weibull(p, data, mc_size, rng),
        Model::Exponential(e) => Ok(e.ln_marginal_likelihood(data)),
    }
}

/// Bayes factor of the Weibull model against the exponential one.
pub fn bayes_factor<P: JointPrior + ?Sized>(
    weibull: &P,
    exponential: &ExponentialPrior,
    data: &CensoredSample,
    mc_size: usize,
    rng: &mut RandomStream,
) -> Result<f64> {
    let lw = log_marginal_likelihood_weibull(weibull, data, mc_size, rng)?;
    Ok((lw - exponential.ln_marginal_likelihood(data)).exp())
}
