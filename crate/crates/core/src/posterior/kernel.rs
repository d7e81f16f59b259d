use super::data::SufficientStats;
use crate::elicitation::JointPrior;
use crate::numerics::{ln_gamma_unchecked, log_add_exp};

/// ln(b(β) + δ(β)).
pub(crate) fn ln_b_plus_delta<P: JointPrior + ?Sized>(beta: f64, prior: &P, stats: &SufficientStats) -> f64 {
    log_add_exp(prior.ln_b(beta), stats.ln_delta(beta))
}

/// Unnormalized log posterior density of β:
/// m ln b + (m+r−1) ln β − (m+r) ln(b+δ) − β m/β̃ + β Σ ln t_u, and −inf below β₀.
pub fn log_post_beta<P: JointPrior + ?Sized>(beta: f64, prior: &P, stats: &SufficientStats) -> f64 {
    if !(beta > 0.0) || beta < prior.beta0() {
        return f64::NEG_INFINITY;
    }
    let m = prior.virtual_size();
    let r = stats.r as f64;
    let lb = prior.ln_b(beta);
    let lbd = log_add_exp(lb, stats.ln_delta(beta));
    m * lb + (m + r - 1.0) * beta.ln() - (m + r) * lbd - beta * m / prior.beta_tilde() + beta * stats.sum_ln_failures
}

/// ln of the censored likelihood integrated over η | β under the prior:
/// β^r Π t_u^{β−1} b^m Γ(m+r) / (Γ(m) (b+δ)^{m+r}).
pub fn ln_eta_marginal_likelihood<P: JointPrior + ?Sized>(beta: f64, prior: &P, stats: &SufficientStats) -> f64 {
    let m = prior.virtual_size();
    let r = stats.r as f64;
    let lb = prior.ln_b(beta);
    let lbd = log_add_exp(lb, stats.ln_delta(beta));
    r * beta.ln() + (beta - 1.0) * stats.sum_ln_failures + m * lb + ln_gamma_unchecked(m + r)
        - ln_gamma_unchecked(m)
        - (m + r) * lbd
}
