use serde::{Deserialize, Serialize};

use super::data::{CensoredSample, SufficientStats};
use super::kernel::{ln_b_plus_delta, log_post_beta};
use crate::distributions::{gamma_ln_pdf, ln_standard_gamma, TruncatedGammaParams};
use crate::elicitation::{JointPrior, McEstimate};
use crate::error::{domain, Error, Result};
use crate::numerics::{ln_gamma_unchecked, minimize_scalar, RandomStream};

const GRID_POINTS: usize = 4096;
const MIN_ACCEPTANCE: f64 = 0.01;
/// Width, in log-density units below the mode, of the region the grid covers.
const GRID_DEPTH: f64 = 45.0;

/// Which algorithm produced the shape draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerPath {
    GammaEnvelope,
    GridInverseCdf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerInfo {
    pub path: SamplerPath,
    pub mode: f64,
    pub proposals: usize,
    pub acceptance_rate: f64,
    pub notes: Vec<String>,
}

/// Posterior shape draws with the sampler record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaDraws {
    pub draws: Vec<f64>,
    pub info: SamplerInfo,
}

struct Target<'a, P: JointPrior + ?Sized> {
    prior: &'a P,
    stats: SufficientStats,
}

impl<P: JointPrior + ?Sized> Target<'_, P> {
    fn lp(&self, beta: f64) -> f64 {
        log_post_beta(beta, self.prior, &self.stats)
    }

    fn lower(&self) -> f64 {
        self.prior.beta0()
    }

    /// Rate of the exponential decay of the kernel as β → ∞.
    fn tail_rate(&self) -> f64 {
        let m = self.prior.virtual_size();
        let r = self.stats.r as f64;
        let ln_t_star = self.prior.max_ln_t_alpha().max(self.stats.max_ln_time());
        m / self.prior.beta_tilde() + (m + r) * ln_t_star - m * self.prior.max_ln_t_alpha() - self.stats.sum_ln_failures
    }

    /// Mode of the kernel, searched in log β.
    fn mode(&self) -> Result<f64> {
        let lo = if self.lower() > 0.0 { self.lower() } else { 1e-6 };
        let hi = (lo * 10.0).max(1e3).max(100.0 * self.prior.beta_tilde());
        let (a, b) = (lo.ln(), hi.ln());
        let n = 400;
        let xs: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
        let (best, best_v) = xs
            .iter()
            .map(|&x| (x, self.lp(x.exp())))
            .fold((a, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc });
        if !best_v.is_finite() {
            return Err(Error::Inference("posterior kernel is not finite anywhere on the search grid".into()));
        }
        let step = (b - a) / n as f64;
        let r = minimize_scalar(|x| -self.lp(x.exp()), (best - step).max(a), (best + step).min(b), 1e-10)?;
        Ok(r.argmin.exp())
    }

    /// Range around the mode where the kernel is within `GRID_DEPTH` of its peak.
    fn support(&self, mode: f64) -> (f64, f64) {
        let top = self.lp(mode);
        let inside = |x: f64| self.lp(x) > top - GRID_DEPTH;
        let mut lo = mode;
        let floor = self.lower();
        loop {
            let next = if floor > 0.0 { floor.max(lo * 0.5) } else { lo * 0.5 };
            if next == lo || !inside(next) || next < 1e-12 {
                lo = if inside(next) { next } else { lo };
                break;
            }
            lo = next;
        }
        let mut hi = mode;
        while inside(hi * 2.0) && hi < 1e6 {
            hi *= 2.0;
        }
        (lo.max(floor), hi * 2.0)
    }
}

/// Gamma law matching a Laplace approximation of the kernel.
struct Envelope {
    law: TruncatedGammaParams,
    ln_tail: f64,
    ln_m: f64,
}

impl Envelope {
    fn ln_g(&self, beta: f64) -> f64 {
        gamma_ln_pdf(beta, self.law.shape, self.law.rate) - self.ln_tail
    }
}

fn build_envelope<P: JointPrior + ?Sized>(t: &Target<'_, P>, mode: f64, notes: &mut Vec<String>) -> Option<Envelope> {
    let h = 1e-4 * mode;
    if mode - h <= t.lower() {
        notes.push("posterior mode sits on the truncation point".into());
        return None;
    }
    let curv = (t.lp(mode + h) - 2.0 * t.lp(mode) + t.lp(mode - h)) / (h * h);
    if !(curv < 0.0) || !curv.is_finite() {
        notes.push("non-negative curvature at the mode".into());
        return None;
    }
    let var = -1.0 / curv * 1.5;
    let m = t.prior.virtual_size();
    let r = t.stats.r as f64;
    let mut shape = (mode * mode / var).min(m + r);
    let mut rate = shape / mode;
    let c = t.tail_rate();
    if !(c > 0.0) {
        notes.push("kernel tail does not decay".into());
        return None;
    }
    if rate >= 0.95 * c {
        rate = 0.95 * c;
        shape = (rate * mode).min(m + r);
    }
    let law = TruncatedGammaParams::new(shape, rate, t.lower()).ok()?;
    let ln_tail = law.tail_mass().ln();
    if !ln_tail.is_finite() {
        return None;
    }
    let mut env = Envelope { law, ln_tail, ln_m: 0.0 };

    // sup of lp − ln g: grid scan in log β, then Brent around the best cell
    let (lo, hi) = t.support(mode);
    let (a, b) = (lo.max(1e-300).ln(), (hi * 4.0).ln());
    let n = 512;
    let ratio = |x: f64| {
        let beta = x.exp();
        t.lp(beta) - env.ln_g(beta)
    };
    let (best, best_v) = (0..=n)
        .map(|i| a + (b - a) * i as f64 / n as f64)
        .map(|x| (x, ratio(x)))
        .fold((a, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc });
    if !best_v.is_finite() {
        return None;
    }
    let step = (b - a) / n as f64;
    let refined = minimize_scalar(|x| -ratio(x), (best - step).max(a), (best + step).min(b), 1e-10)
        .map(|r| -r.min_value)
        .unwrap_or(best_v);
    env.ln_m = best_v.max(refined);
    Some(env)
}

fn sample_envelope<P: JointPrior + ?Sized>(
    t: &Target<'_, P>,
    env: &Envelope,
    count: usize,
    rng: &mut RandomStream,
    notes: &mut Vec<String>,
) -> Result<Option<(Vec<f64>, usize)>> {
    let mut draws = Vec::with_capacity(count);
    let mut proposals = 0usize;
    while draws.len() < count {
        let beta = env.law.sample(rng)?;
        proposals += 1;
        let excess = t.lp(beta) - env.ln_g(beta) - env.ln_m;
        if excess > 1e-9 {
            notes.push(format!("envelope violated at beta = {beta:.6}"));
            return Ok(None);
        }
        if rng.open01().ln() < excess {
            draws.push(beta);
        }
        if proposals >= 2000 && (draws.len() as f64) < MIN_ACCEPTANCE * proposals as f64 {
            notes.push(format!("envelope acceptance {:.4} below {MIN_ACCEPTANCE}", draws.len() as f64 / proposals as f64));
            return Ok(None);
        }
    }
    Ok(Some((draws, proposals)))
}

fn sample_grid<P: JointPrior + ?Sized>(t: &Target<'_, P>, mode: f64, count: usize, rng: &mut RandomStream) -> Result<Vec<f64>> {
    let (lo, hi) = t.support(mode);
    let xs: Vec<f64> = (0..GRID_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    let top = t.lp(mode);
    let dens: Vec<f64> = xs.iter().map(|&x| (t.lp(x) - top).exp()).collect();
    let mut cdf = vec![0.0; GRID_POINTS];
    for i in 1..GRID_POINTS {
        cdf[i] = cdf[i - 1] + 0.5 * (dens[i] + dens[i - 1]) * (xs[i] - xs[i - 1]);
    }
    let total = cdf[GRID_POINTS - 1];
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Inference("posterior shape kernel cannot be normalized".into()));
    }
    Ok((0..count)
        .map(|_| {
            let u = rng.open01() * total;
            let j = cdf.partition_point(|&c| c < u).clamp(1, GRID_POINTS - 1);
            let (c0, c1) = (cdf[j - 1], cdf[j]);
            let w = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
            xs[j - 1] + w * (xs[j] - xs[j - 1])
        })
        .collect())
}

/// Draws from π(β | data): gamma-envelope rejection sampling, falling back to
/// inversion of the kernel on a fine grid.
pub fn sample_beta_posterior<P: JointPrior + ?Sized>(
    prior: &P,
    data: &CensoredSample,
    count: usize,
    rng: &mut RandomStream,
) -> Result<BetaDraws> {
    if count == 0 {
        return Err(domain("sample_beta_posterior", "count must be at least 1"));
    }
    let t = Target {
        prior,
        stats: data.stats(),
    };
    let mode = t.mode()?;
    let mut notes = Vec::new();
    if let Some(env) = build_envelope(&t, mode, &mut notes) {
        let mut env_rng = rng.substream(0);
        if let Some((draws, proposals)) = sample_envelope(&t, &env, count, &mut env_rng, &mut notes)? {
            return Ok(BetaDraws {
                draws,
                info: SamplerInfo {
                    path: SamplerPath::GammaEnvelope,
                    mode,
                    proposals,
                    acceptance_rate: count as f64 / proposals as f64,
                    notes,
                },
            });
        }
    }
    let mut grid_rng = rng.substream(1);
    let draws = sample_grid(&t, mode, count, &mut grid_rng)?;
    Ok(BetaDraws {
        draws,
        info: SamplerInfo {
            path: SamplerPath::GridInverseCdf,
            mode,
            proposals: count,
            acceptance_rate: 1.0,
            notes,
        },
    })
}

/// Joint posterior sample with derived quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub eta: Vec<f64>,
    pub beta: Vec<f64>,
    pub mttf: Vec<f64>,
    pub predictive: Vec<f64>,
    pub sampler: SamplerInfo,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }
}

/// ln of one draw of η | β, data ~ GIG(m+r, b+δ, β).
fn ln_eta_given_beta<P: JointPrior + ?Sized>(
    beta: f64,
    prior: &P,
    stats: &SufficientStats,
    rng: &mut RandomStream,
) -> f64 {
    let a = prior.virtual_size() + stats.r as f64;
    let ln_g = ln_standard_gamma(a, rng);
    -(ln_g - ln_b_plus_delta(beta, prior, stats)) / beta
}

/// β from its marginal posterior, then η | β, then a lifetime from Weibull(η, β).
pub fn gibbs_joint<P: JointPrior + ?Sized>(
    prior: &P,
    data: &CensoredSample,
    count: usize,
    rng: &mut RandomStream,
) -> Result<PosteriorDraws> {
    let BetaDraws { draws: beta, info } = sample_beta_posterior(prior, data, count, &mut rng.substream(10))?;
    let stats = data.stats();
    let mut eta_rng = rng.substream(11);
    let mut pred_rng = rng.substream(12);
    let mut eta = Vec::with_capacity(count);
    let mut mttf = Vec::with_capacity(count);
    let mut predictive = Vec::with_capacity(count);
    for &b in &beta {
        let le = ln_eta_given_beta(b, prior, &stats, &mut eta_rng);
        eta.push(le.exp());
        mttf.push((le + ln_gamma_unchecked(1.0 + 1.0 / b)).exp());
        let u = pred_rng.open01();
        predictive.push((le + (-u.ln()).ln() / b).exp());
    }
    Ok(PosteriorDraws {
        eta,
        beta,
        mttf,
        predictive,
        sampler: info,
    })
}

/// η draws at a fixed shape, for checking the conditional posterior.
pub fn eta_draws_given_beta<P: JointPrior + ?Sized>(
    beta: f64,
    prior: &P,
    data: &CensoredSample,
    count: usize,
    rng: &mut RandomStream,
) -> Vec<f64> {
    let stats = data.stats();
    (0..count).map(|_| ln_eta_given_beta(beta, prior, &stats, rng).exp()).collect()
}

/// E[η | β, data] = Γ(m+r−1/β)/Γ(m+r) · (b+δ)^{1/β}; `None` when m+r ≤ 1/β.
pub fn conditional_eta_mean<P: JointPrior + ?Sized>(beta: f64, prior: &P, data: &CensoredSample) -> Option<f64> {
    let a = prior.virtual_size() + data.r() as f64;
    if a <= 1.0 / beta {
        return None;
    }
    let ln_a = ln_gamma_unchecked(a - 1.0 / beta) - ln_gamma_unchecked(a);
    Some((ln_a + ln_b_plus_delta(beta, prior, &data.stats()) / beta).exp())
}

/// Result of a predictive moment request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MomentOutcome {
    Defined { value: f64, std_error: f64 },
    /// The moment is infinite unless β₀ > k/(r+m).
    Undefined { beta0: f64, required_above: f64 },
}

/// k-th moment of the posterior predictive lifetime, E[η^k Γ(1 + k/β)].
pub fn predictive_moment<P: JointPrior + ?Sized>(
    prior: &P,
    data: &CensoredSample,
    k: f64,
    draws: &PosteriorDraws,
) -> Result<MomentOutcome> {
    if !(k > 0.0) {
        return Err(domain("predictive_moment", format!("k must be positive, got {k}")));
    }
    let bound = k / (data.r() as f64 + prior.virtual_size());
    if prior.beta0() <= bound {
        return Ok(MomentOutcome::Undefined {
            beta0: prior.beta0(),
            required_above: bound,
        });
    }
    let values: Vec<f64> = draws
        .eta
        .iter()
        .zip(&draws.beta)
        .map(|(&e, &b)| (k * e.ln() + ln_gamma_unchecked(1.0 + k / b)).exp())
        .collect();
    let est = McEstimate::from_values(&values);
    Ok(MomentOutcome::Defined {
        value: est.value,
        std_error: est.std_error,
    })
}

/// Ratio of virtual to observed failures, m / r.
pub fn prior_weight<P: JointPrior + ?Sized>(prior: &P, data: &CensoredSample) -> Result<f64> {
    let r = data.r();
    if r == 0 {
        return Err(domain("prior_weight", "no observed failures"));
    }
    Ok(prior.virtual_size() / r as f64)
}
