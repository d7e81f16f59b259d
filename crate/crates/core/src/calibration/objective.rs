use crate::distributions::TruncatedGammaParams;
use crate::elicitation::{beta_tilde_from_median, ln_k_unchecked, ExpertSpec};
use crate::error::{domain, Error, Result};
use crate::numerics::{gamma_quantile, ln1p_exp, log_sum_exp};

/// Minimum effective sample size accepted before asking for a new anchor.
pub const MIN_ESS: f64 = 50.0;

/// Discrete KL loss between the stated bin masses and the effective ones.
///
/// `effective` is aligned with `spec.quantiles` (MTS included); bins are the
/// gaps between consecutive levels with 0 and 1 appended.
pub fn discrete_kl(spec: &ExpertSpec, effective: &[f64]) -> Result<f64> {
    if effective.len() != spec.quantiles.len() {
        return Err(domain(
            "discrete_kl",
            format!("expected {} effective levels, got {}", spec.quantiles.len(), effective.len()),
        ));
    }
    let stated = spec.quantiles.iter().map(|q| q.alpha);
    let mut prev_s = 0.0;
    let mut prev_e = 0.0;
    let mut total = 0.0;
    for (i, (s, e)) in stated.chain([1.0]).zip(effective.iter().copied().chain([1.0])).enumerate() {
        let ds = s - prev_s;
        let de = e - prev_e;
        if !(de > 0.0) {
            return Err(Error::DegenerateBin { index: i, mass: de });
        }
        total += ds * (ds / de).ln();
        prev_s = s;
        prev_e = e;
    }
    // Gibbs' inequality; clip rounding noise
    Ok(total.max(0.0))
}

/// Shape draws of one anchored importance run.
///
/// The uniforms are shared across every `m` and anchor so that the loss is a
/// smooth function of both.
#[derive(Debug, Clone)]
pub struct KlObjective<'a> {
    spec: &'a ExpertSpec,
    m: f64,
    anchor_median: f64,
    anchor_mean: f64,
    ln_anchor_tail: f64,
    betas: Vec<f64>,
    /// ln P(T > t_i | β_j) for each supplementary statement i.
    ln_surv: Vec<(usize, Vec<f64>)>,
}

impl<'a> KlObjective<'a> {
    /// Builds the anchored sample β_j ~ Gamma(m, m/β̃_m(anchor)) truncated at β₀,
    /// where `anchor_median` is the prior median of β implied by the anchor.
    pub fn new(spec: &'a ExpertSpec, m: f64, anchor_median: f64, uniforms: &[f64]) -> Result<Self> {
        if uniforms.is_empty() {
            return Err(domain("kl_objective", "empty uniform sample"));
        }
        let anchor_mean = beta_tilde_from_median(m, anchor_median)?;
        let law = TruncatedGammaParams::new(m, m / anchor_mean, spec.beta0)?;
        let betas = if spec.beta0 == 0.0 {
            let scale = anchor_mean / m;
            uniforms
                .iter()
                .map(|&u| gamma_quantile(m, 1.0, u).map(|x| x * scale))
                .collect::<Result<Vec<_>>>()?
        } else {
            uniforms.iter().map(|&u| law.quantile(u)).collect::<Result<Vec<_>>>()?
        };
        let mts = spec.mts();
        let ln_k = ln_k_unchecked(m, mts.alpha);
        let ln_surv = spec
            .supplementary()
            .map(|(i, q)| {
                let lr = (q.t / mts.t).ln();
                (i, betas.iter().map(|&b| -m * ln1p_exp(b * lr - ln_k)).collect())
            })
            .collect();
        Ok(Self {
            spec,
            m,
            anchor_median,
            anchor_mean,
            ln_anchor_tail: law.tail_mass().ln(),
            betas,
            ln_surv,
        })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn anchor_median(&self) -> f64 {
        self.anchor_median
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// Log importance weights for target median `beta_e`.
    fn ln_weights(&self, beta_e: f64) -> Result<Vec<f64>> {
        let m = self.m;
        let target_mean = beta_tilde_from_median(m, beta_e)?;
        let target = TruncatedGammaParams::new(m, m / target_mean, self.spec.beta0)?;
        let ln_target_tail = target.tail_mass().ln();
        if !ln_target_tail.is_finite() {
            return Err(Error::DegenerateSupport(format!(
                "no shape mass above {} at median {beta_e}",
                self.spec.beta0
            )));
        }
        let c = m * (self.anchor_mean / target_mean).ln() + self.ln_anchor_tail - ln_target_tail;
        let slope = m * (1.0 / target_mean - 1.0 / self.anchor_mean);
        Ok(self.betas.iter().map(|&b| c - b * slope).collect())
    }

    /// Effective sample size of the importance weights at `beta_e`.
    pub fn ess(&self, beta_e: f64) -> Result<f64> {
        let lw = self.ln_weights(beta_e)?;
        let a = log_sum_exp(&lw);
        let b = log_sum_exp(&lw.iter().map(|x| 2.0 * x).collect::<Vec<_>>());
        Ok((2.0 * a - b).exp())
    }

    /// Effective predictive levels at every stated time, MTS included (exact).
    pub fn effective_alphas(&self, beta_e: f64) -> Result<Vec<f64>> {
        if !(beta_e > 0.0) {
            return Err(domain("effective_alphas", format!("beta_e must be positive, got {beta_e}")));
        }
        let lw = self.ln_weights(beta_e)?;
        let ess = {
            let a = log_sum_exp(&lw);
            let b = log_sum_exp(&lw.iter().map(|x| 2.0 * x).collect::<Vec<_>>());
            (2.0 * a - b).exp()
        };
        if ess < MIN_ESS {
            return Err(Error::Reanchor { ess, min: MIN_ESS });
        }
        let ln_n = (lw.len() as f64).ln();
        let mut out: Vec<f64> = self.spec.quantiles.iter().map(|q| q.alpha).collect();
        let mut terms = vec![0.0; lw.len()];
        for (i, ls) in &self.ln_surv {
            for ((t, w), s) in terms.iter_mut().zip(&lw).zip(ls) {
                *t = w + s;
            }
            out[*i] = -(log_sum_exp(&terms) - ln_n).exp_m1();
        }
        Ok(out)
    }

    /// Loss at `beta_e`; +inf when the estimate is unusable.
    pub fn loss(&self, beta_e: f64) -> f64 {
        match self.effective_alphas(beta_e) {
            Ok(e) => discrete_kl(self.spec, &e).unwrap_or(f64::INFINITY),
            Err(_) => f64::INFINITY,
        }
    }
}
