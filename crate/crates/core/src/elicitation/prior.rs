use serde::{Deserialize, Serialize};

use super::spec::{ExpertSpec, QuantileSpec};
use crate::distributions::{GigParams, TruncatedGammaParams};
use crate::error::{domain, Error, Result};
use crate::numerics::{chi_square_quantile, ln1p_exp, ln_expm1, ln_gamma_unchecked, RandomStream};

/// ln k_α(m) with k_α(m) = ((1−α)^{−1/m} − 1)^{−1}. Arguments are not checked.
pub(crate) fn ln_k_unchecked(m: f64, alpha: f64) -> f64 {
    let c = -(-alpha).ln_1p();
    -ln_expm1(c / m)
}

fn check_m_alpha(what: &'static str, m: f64, alpha: f64) -> Result<()> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(domain(what, format!("m must be positive, got {m}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(what, format!("alpha must lie in (0,1), got {alpha}")));
    }
    Ok(())
}

/// The β-free factor of the scale aggregate.
pub fn k_alpha(m: f64, alpha: f64) -> Result<f64> {
    check_m_alpha("k_alpha", m, alpha)?;
    Ok(ln_k_unchecked(m, alpha).exp())
}

/// ln b_α(m, β) = ln k_α(m) + β ln t_α.
pub fn ln_b_alpha(m: f64, beta: f64, spec: &QuantileSpec) -> Result<f64> {
    check_m_alpha("b_alpha", m, spec.alpha)?;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(domain("b_alpha", format!("beta must be positive, got {beta}")));
    }
    if !(spec.t > 0.0) {
        return Err(domain("b_alpha", format!("t must be positive, got {}", spec.t)));
    }
    Ok(ln_k_unchecked(m, spec.alpha) + beta * spec.t.ln())
}

/// Scale aggregate b_α(m, β) making t_α the α-quantile of the predictive given β.
pub fn b_alpha(m: f64, beta: f64, spec: &QuantileSpec) -> Result<f64> {
    Ok(ln_b_alpha(m, beta, spec)?.exp())
}

/// Gamma mean β̃ such that P(β < β_e) = 1 − α_βe under Gamma(m, rate m/β̃).
pub fn beta_tilde_from_aging(m: f64, beta_e: f64, alpha_beta_e: f64) -> Result<f64> {
    check_m_alpha("beta_tilde_from_aging", m, alpha_beta_e)?;
    if !(beta_e > 0.0) || !beta_e.is_finite() {
        return Err(domain("beta_tilde_from_aging", format!("beta_e must be positive, got {beta_e}")));
    }
    Ok(2.0 * m * beta_e / chi_square_quantile(2.0 * m, 1.0 - alpha_beta_e)?)
}

/// β̃ for which `beta_e` is the prior median of β.
pub fn beta_tilde_from_median(m: f64, beta_e: f64) -> Result<f64> {
    beta_tilde_from_aging(m, beta_e, 0.5)
}

/// Scale aggregate from a marginal MTTF statement t_e. Needs m > 1/β.
pub fn b_from_mttf(m: f64, beta: f64, t_e: f64) -> Result<f64> {
    check_positive("b_from_mttf", m, beta, t_e)?;
    if m <= 1.0 / beta {
        return Err(domain("b_from_mttf", format!("requires m > 1/beta, got m={m}, beta={beta}")));
    }
    let ln_ratio = ln_gamma_unchecked(m) - ln_gamma_unchecked(1.0 + 1.0 / beta) - ln_gamma_unchecked(m - 1.0 / beta);
    Ok((beta * (ln_ratio + t_e.ln())).exp())
}

/// Scale aggregate from a marginal mode statement t_e. Needs β > 1.
pub fn b_from_mode(m: f64, beta: f64, t_e: f64) -> Result<f64> {
    check_positive("b_from_mode", m, beta, t_e)?;
    if beta <= 1.0 {
        return Err(domain("b_from_mode", format!("requires beta > 1, got {beta}")));
    }
    Ok((m * beta + 1.0) / (beta - 1.0) * t_e.powf(beta))
}

fn check_positive(what: &'static str, m: f64, beta: f64, t_e: f64) -> Result<()> {
    for (name, v) in [("m", m), ("beta", beta), ("t_e", t_e)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(domain(what, format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

/// Common interface of single-expert and aggregated priors.
///
/// Both have the form η | β ~ GIG(m, b(β), β), β ~ Gamma(m, m/β̃) truncated at β₀;
/// they differ only in the scale aggregate b(β).
pub trait JointPrior {
    fn virtual_size(&self) -> f64;
    fn beta_tilde(&self) -> f64;
    fn beta0(&self) -> f64;
    fn ln_b(&self, beta: f64) -> f64;
    /// Largest ln t_α among the statements; bounds the growth of ln b in β.
    fn max_ln_t_alpha(&self) -> f64;
    /// The MTS shared by every statement, if there is one.
    fn common_mts(&self) -> Option<QuantileSpec>;

    fn beta_prior(&self) -> Result<TruncatedGammaParams> {
        let m = self.virtual_size();
        TruncatedGammaParams::new(m, m / self.beta_tilde(), self.beta0())
    }

    /// ln P(T > t | β) = −m ln(1 + t^β / b(β)).
    fn ln_predictive_survival_given_beta(&self, t: f64, beta: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        -self.virtual_size() * ln1p_exp(beta * t.ln() - self.ln_b(beta))
    }

    /// ln of the η-marginal density m b^m β t^{β−1} / (b + t^β)^{m+1}.
    fn ln_predictive_pdf_given_beta(&self, t: f64, beta: f64) -> f64 {
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let m = self.virtual_size();
        let lt = t.ln();
        let lb = self.ln_b(beta);
        let ln_sum = lb + ln1p_exp(beta * lt - lb);
        m.ln() + m * lb + beta.ln() + (beta - 1.0) * lt - (m + 1.0) * ln_sum
    }

    /// Normalized joint log density of (η, β); −inf below β₀.
    fn ln_density(&self, eta: f64, beta: f64) -> Result<f64> {
        if !(beta > 0.0) || beta < self.beta0() {
            return Ok(f64::NEG_INFINITY);
        }
        let gig = GigParams::from_ln_b(self.virtual_size(), self.ln_b(beta), beta)?;
        Ok(self.beta_prior()?.ln_pdf(beta) + gig.ln_pdf(eta)?)
    }
}

/// Joint prior built from one expert's most trustworthy statement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullPrior {
    pub m: f64,
    pub t_alpha: f64,
    pub alpha: f64,
    pub beta_tilde: f64,
    #[serde(default)]
    pub beta0: f64,
}

impl WeibullPrior {
    pub fn new(m: f64, mts: QuantileSpec, beta_tilde: f64, beta0: f64) -> Result<Self> {
        let p = Self {
            m,
            t_alpha: mts.t,
            alpha: mts.alpha,
            beta_tilde,
            beta0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_m_alpha("weibull_prior", self.m, self.alpha)?;
        if !(self.t_alpha > 0.0) || !self.t_alpha.is_finite() {
            return Err(domain("weibull_prior", format!("t_alpha must be positive, got {}", self.t_alpha)));
        }
        if !(self.beta_tilde > 0.0) || !self.beta_tilde.is_finite() {
            return Err(Error::Propriety(format!(
                "gamma mean of the shape must be positive, got {}",
                self.beta_tilde
            )));
        }
        if !(self.beta0 >= 0.0) || !self.beta0.is_finite() {
            return Err(domain("weibull_prior", format!("beta0 must be non-negative, got {}", self.beta0)));
        }
        Ok(())
    }

    pub fn mts(&self) -> QuantileSpec {
        QuantileSpec {
            alpha: self.alpha,
            t: self.t_alpha,
        }
    }

    pub fn k(&self) -> f64 {
        ln_k_unchecked(self.m, self.alpha).exp()
    }
}

impl JointPrior for WeibullPrior {
    fn virtual_size(&self) -> f64 {
        self.m
    }
    fn beta_tilde(&self) -> f64 {
        self.beta_tilde
    }
    fn beta0(&self) -> f64 {
        self.beta0
    }
    fn ln_b(&self, beta: f64) -> f64 {
        ln_k_unchecked(self.m, self.alpha) + beta * self.t_alpha.ln()
    }
    fn max_ln_t_alpha(&self) -> f64 {
        self.t_alpha.ln()
    }
    fn common_mts(&self) -> Option<QuantileSpec> {
        Some(self.mts())
    }
}

/// Packages a calibrated (m, β̃) with the expert's MTS and truncation.
pub fn build_prior(spec: &ExpertSpec, m: f64, beta_tilde: f64) -> Result<WeibullPrior> {
    spec.validate()?;
    WeibullPrior::new(m, spec.mts(), beta_tilde, spec.beta0)
}

/// 1 − (1 + t^β/b(β))^{−m}.
pub fn predictive_cdf_given_beta<P: JointPrior + ?Sized>(t: f64, beta: f64, prior: &P) -> f64 {
    -prior.ln_predictive_survival_given_beta(t, beta).exp_m1()
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

impl McEstimate {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            value: mean,
            std_error: (var / n).sqrt(),
        }
    }
}

/// `n` stratified draws from the shape prior, in increasing order.
pub fn prior_beta_sample<P: JointPrior + ?Sized>(prior: &P, n: usize, rng: &mut RandomStream) -> Result<Vec<f64>> {
    let law = prior.beta_prior()?;
    rng.stratified(n).into_iter().map(|u| law.quantile(u)).collect()
}

/// Prior predictive CDF at `t`, averaging the conditional CDF over a shape sample.
pub fn predictive_cdf<P: JointPrior + ?Sized>(
    t: f64,
    prior: &P,
    mc_size: usize,
    rng: &mut RandomStream,
) -> Result<McEstimate> {
    if mc_size == 0 {
        return Err(domain("predictive_cdf", "mc_size must be at least 1"));
    }
    let betas = prior_beta_sample(prior, mc_size, rng)?;
    Ok(predictive_cdf_on_sample(t, prior, &betas))
}

/// Same as [`predictive_cdf`] on a caller-supplied shape sample.
pub fn predictive_cdf_on_sample<P: JointPrior + ?Sized>(t: f64, prior: &P, betas: &[f64]) -> McEstimate {
    let values: Vec<f64> = betas.iter().map(|&b| predictive_cdf_given_beta(t, b, prior)).collect();
    McEstimate::from_values(&values)
}
