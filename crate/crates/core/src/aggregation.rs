//! Pooling of independent experts by concatenating their virtual samples.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::elicitation::{ln_k_unchecked, predictive_cdf, JointPrior, McEstimate, QuantileSpec, WeibullPrior};
use crate::error::{Error, Result};
use crate::numerics::{ln_gamma_unchecked, log_sum_exp, RandomStream};

/// One expert's share of an aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateTerm {
    pub m: f64,
    pub alpha: f64,
    pub t_alpha: f64,
    pub beta_tilde: f64,
}

impl AggregateTerm {
    fn ln_k(&self) -> f64 {
        ln_k_unchecked(self.m, self.alpha)
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.t_alpha
            .total_cmp(&other.t_alpha)
            .then(self.alpha.total_cmp(&other.alpha))
            .then(self.m.total_cmp(&other.m))
            .then(self.beta_tilde.total_cmp(&other.beta_tilde))
    }
}

/// Prior of the pooled virtual sample: b(β) = Σ_i k_i t_i^β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatePrior {
    pub m: f64,
    pub beta_tilde: f64,
    #[serde(default)]
    pub beta0: f64,
    pub terms: Vec<AggregateTerm>,
}

impl AggregatePrior {
    /// Builds the aggregate from terms, in canonical order so the result does
    /// not depend on how the experts were listed or grouped.
    fn from_terms(mut terms: Vec<AggregateTerm>, beta0: f64) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Incompatible("nothing to aggregate".into()));
        }
        terms.sort_by(AggregateTerm::canonical_cmp);
        let m: f64 = terms.iter().map(|t| t.m).sum();
        let beta_tilde = if terms.len() == 1 {
            terms[0].beta_tilde
        } else {
            m / terms.iter().map(|t| t.m / t.beta_tilde).sum::<f64>()
        };
        let agg = Self {
            m,
            beta_tilde,
            beta0,
            terms,
        };
        agg.validate()?;
        Ok(agg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::Incompatible("aggregate has no terms".into()));
        }
        for t in &self.terms {
            WeibullPrior {
                m: t.m,
                t_alpha: t.t_alpha,
                alpha: t.alpha,
                beta_tilde: t.beta_tilde,
                beta0: self.beta0,
            }
            .validate()?;
        }
        if !(self.beta_tilde > 0.0) || !self.beta_tilde.is_finite() {
            return Err(Error::Propriety(format!("aggregate gamma mean {} is not positive", self.beta_tilde)));
        }
        Ok(())
    }

    /// Σ_i k_{α_i}(m_i): the coefficient of t^β when all experts share t_α.
    pub fn k_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.ln_k().exp()).sum()
    }
}

impl From<WeibullPrior> for AggregatePrior {
    fn from(p: WeibullPrior) -> Self {
        Self {
            m: p.m,
            beta_tilde: p.beta_tilde,
            beta0: p.beta0,
            terms: vec![AggregateTerm {
                m: p.m,
                alpha: p.alpha,
                t_alpha: p.t_alpha,
                beta_tilde: p.beta_tilde,
            }],
        }
    }
}

impl JointPrior for AggregatePrior {
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
        if self.terms.len() == 1 {
            let t = &self.terms[0];
            return t.ln_k() + beta * t.t_alpha.ln();
        }
        let parts: Vec<f64> = self.terms.iter().map(|t| t.ln_k() + beta * t.t_alpha.ln()).collect();
        log_sum_exp(&parts)
    }
    fn max_ln_t_alpha(&self) -> f64 {
        self.terms.iter().map(|t| t.t_alpha.ln()).fold(f64::NEG_INFINITY, f64::max)
    }
    fn common_mts(&self) -> Option<QuantileSpec> {
        let first = self.terms.first()?;
        self.terms
            .iter()
            .all(|t| t.alpha == first.alpha && t.t_alpha == first.t_alpha)
            .then_some(QuantileSpec {
                alpha: first.alpha,
                t: first.t_alpha,
            })
    }
}

fn check_beta0<'a>(mut values: impl Iterator<Item = &'a f64>) -> Result<f64> {
    let first = *values.next().ok_or_else(|| Error::Incompatible("nothing to aggregate".into()))?;
    for &b in values {
        if b != first {
            return Err(Error::Incompatible(format!(
                "shape truncation differs between experts ({first} vs {b})"
            )));
        }
    }
    Ok(first)
}

/// Pools single-expert priors sharing the same β₀.
pub fn aggregate(priors: &[WeibullPrior]) -> Result<AggregatePrior> {
    let beta0 = check_beta0(priors.iter().map(|p| &p.beta0))?;
    for p in priors {
        p.validate()?;
    }
    let terms = priors.iter().map(|&p| AggregatePrior::from(p).terms[0]).collect();
    AggregatePrior::from_terms(terms, beta0)
}

/// Pools already aggregated priors; `combine(&[agg(A, B), C.into()])` equals `aggregate(&[A, B, C])`.
pub fn combine(parts: &[AggregatePrior]) -> Result<AggregatePrior> {
    let beta0 = check_beta0(parts.iter().map(|p| &p.beta0))?;
    let terms = parts.iter().flat_map(|p| p.terms.iter().copied()).collect();
    AggregatePrior::from_terms(terms, beta0)
}

/// Prior predictive CDF of the pooled prior.
pub fn aggregate_predictive_cdf(
    t: f64,
    agg: &AggregatePrior,
    mc_size: usize,
    rng: &mut RandomStream,
) -> Result<McEstimate> {
    predictive_cdf(t, agg, mc_size, rng)
}

/// Summaries of one expert's virtual sample.
///
/// `k` is gamma distributed given μ = η^{−β} and `beta_stat` is inverse-gamma
/// distributed given β; see [`virtual_log_likelihood`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualStats {
    pub m: f64,
    pub k: f64,
    pub beta_stat: f64,
    pub t_alpha: f64,
}

pub fn virtual_stats(prior: &WeibullPrior) -> Result<VirtualStats> {
    prior.validate()?;
    Ok(VirtualStats {
        m: prior.m,
        k: prior.k(),
        beta_stat: prior.beta_tilde,
        t_alpha: prior.t_alpha,
    })
}

/// Log likelihood of the virtual statistics:
/// k ~ Gamma(m, rate η^{−β} t_α^β) and beta_stat ~ IG(m, scale m β).
pub fn virtual_log_likelihood(stats: &VirtualStats, eta: f64, beta: f64) -> f64 {
    let m = stats.m;
    let ln_rate = beta * (stats.t_alpha.ln() - eta.ln());
    let ln_gamma_part =
        m * ln_rate + (m - 1.0) * stats.k.ln() - stats.k * ln_rate.exp() - ln_gamma_unchecked(m);
    let ln_scale = (m * beta).ln();
    let x = stats.beta_stat;
    let ln_ig_part = m * ln_scale - (m + 1.0) * x.ln() - m * beta / x - ln_gamma_unchecked(m);
    ln_gamma_part + ln_ig_part
}

/// ln of the reference measure the virtual likelihoods are combined with.
pub fn reference_log_measure(eta: f64, _beta: f64) -> f64 {
    -eta.ln()
}
