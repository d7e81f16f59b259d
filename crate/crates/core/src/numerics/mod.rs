//! Special functions, scalar solvers and random streams used by every other module.

mod optimize;
mod random;
mod special;

pub use optimize::{minimize_scalar, newton_root, BracketedMinimum, DEFAULT_ARG_TOL};
pub use random::{RandomStream, StreamKey, DEFAULT_SEED};
pub use special::{
    chi_square_quantile, gamma_quantile, gamma_quantile_upper, ln1p_exp, ln_expm1, log_add_exp,
    log_gamma, log_sum_exp, regularized_gamma_p, regularized_gamma_q,
};

pub(crate) use special::{incomplete_gamma_pair, ln_gamma_unchecked};
