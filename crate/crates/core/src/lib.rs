//! Expert-elicited Weibull priors built as virtual-sample posteriors, and censored-data inference under them.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod calibration;
pub mod cli;
pub mod distributions;
pub mod elicitation;
pub mod equitability;
pub mod error;
pub mod numerics;
pub mod posterior;

pub use error::{Error, Result};
