//! Weibull, gamma (optionally left-truncated), inverse-gamma and generalized
//! inverse gamma laws. Densities are evaluated in log space throughout.

mod gamma;
mod gig;
mod weibull;

pub use gamma::{
    gamma_ln_pdf, gamma_sample, inverse_gamma_sample, ln_standard_gamma, TruncatedGammaParams,
};
pub use gig::GigParams;
pub use weibull::WeibullParams;
