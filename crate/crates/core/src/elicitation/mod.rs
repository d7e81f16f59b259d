//! Expert quantile statements and the joint (η, β) prior they induce.

mod prior;
mod spec;

pub use prior::{
    b_alpha, b_from_mode, b_from_mttf, beta_tilde_from_aging, beta_tilde_from_median, build_prior,
    k_alpha, ln_b_alpha, predictive_cdf, predictive_cdf_given_beta, predictive_cdf_on_sample,
    prior_beta_sample, JointPrior, McEstimate, WeibullPrior,
};
pub use spec::{AgingInfo, ExpertSpec, QuantileSpec};

pub(crate) use prior::ln_k_unchecked;
