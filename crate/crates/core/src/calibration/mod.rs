//! Calibration of the shape gamma mean β̃(m) and of the virtual size m
//! against an expert's supplementary quantile statements.

mod calibrate;
mod objective;

pub use calibrate::{
    calibrate_beta, calibrate_beta_on, calibrate_m, coverage_error, err, initial_anchor, BetaCalibration,
    CalibrationOptions, CalibrationReport,
};
pub use objective::{discrete_kl, KlObjective, MIN_ESS};
