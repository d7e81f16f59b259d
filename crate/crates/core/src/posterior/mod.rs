//! Posterior inference under the calibrated prior with right-censored data.

mod data;
mod kernel;
mod mle;
mod sampler;

pub use data::{field_returns, CensoredSample, SufficientStats};
pub use kernel::{ln_eta_marginal_likelihood, log_post_beta};
pub use mle::{fit_mle, MleFit};
pub use sampler::{
    conditional_eta_mean, eta_draws_given_beta, gibbs_joint, predictive_moment, prior_weight, sample_beta_posterior,
    BetaDraws, MomentOutcome, PosteriorDraws, SamplerInfo, SamplerPath,
};
