use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::{discrete_kl, KlObjective, MIN_ESS};
use crate::elicitation::{beta_tilde_from_aging, beta_tilde_from_median, build_prior, ExpertSpec, WeibullPrior};
use crate::error::{domain, Error, Result};
use crate::numerics::{chi_square_quantile, minimize_scalar, RandomStream};

/// Tuning knobs of the two-level calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationOptions {
    /// Shape draws in the shared importance sample.
    pub mc_size: usize,
    /// Draws used for the effective levels quoted in the report.
    pub report_mc_size: usize,
    pub m_min: f64,
    pub m_max: f64,
    pub grid_points: usize,
    pub beta_e_min: f64,
    pub beta_e_max: f64,
    /// Tolerance in ln β_e and ln m.
    pub tol: f64,
    pub max_anchor_rounds: usize,
    /// ESS fraction at the optimum below which the sample is re-anchored there.
    pub settle_ess_fraction: f64,
    /// ESS fraction bounding the region searched around each anchor.
    pub trust_ess_fraction: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            mc_size: 5_000,
            report_mc_size: 50_000,
            m_min: 0.05,
            m_max: 50.0,
            grid_points: 60,
            beta_e_min: 0.05,
            beta_e_max: 15.0,
            tol: 1e-6,
            max_anchor_rounds: 8,
            settle_ess_fraction: 0.9,
            trust_ess_fraction: 0.1,
        }
    }
}

impl CalibrationOptions {
    fn validate(&self) -> Result<()> {
        if self.mc_size == 0 || self.report_mc_size == 0 {
            return Err(domain("calibration", "sample sizes must be positive"));
        }
        if !(self.m_min > 0.0 && self.m_max > self.m_min) {
            return Err(domain("calibration", format!("bad m range ({}, {}]", self.m_min, self.m_max)));
        }
        if self.grid_points < 3 {
            return Err(domain("calibration", "grid needs at least 3 points"));
        }
        if !(self.tol > 0.0) || self.max_anchor_rounds == 0 {
            return Err(domain("calibration", "tolerance and anchor rounds must be positive"));
        }
        Ok(())
    }

    fn beta_e_bracket(&self, spec: &ExpertSpec) -> Result<(f64, f64)> {
        let lo = spec.beta0.max(self.beta_e_min);
        if !(self.beta_e_max > lo) {
            return Err(domain(
                "calibrate_beta",
                format!("empty median bracket [{lo}, {}]", self.beta_e_max),
            ));
        }
        Ok((lo, self.beta_e_max))
    }

    pub fn m_grid(&self) -> Vec<f64> {
        let (a, b) = (self.m_min.ln(), self.m_max.ln());
        let n = self.grid_points;
        (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
    }
}

/// Best shape calibration at a fixed virtual size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaCalibration {
    pub m: f64,
    pub beta_e_star: f64,
    pub beta_tilde_star: f64,
    pub err: f64,
    pub effective_alphas: Vec<f64>,
    pub interior: bool,
    pub anchor_rounds: usize,
}

/// Shape of the Weibull law through the MTS and the supplementary statement
/// farthest from it in log time.
pub fn initial_anchor(spec: &ExpertSpec) -> Result<f64> {
    let mts = spec.mts();
    let (_, w) = spec
        .supplementary()
        .max_by(|a, b| {
            let da = (a.1.t / mts.t).ln().abs();
            let db = (b.1.t / mts.t).ln().abs();
            da.total_cmp(&db)
        })
        .ok_or_else(|| Error::InvalidSpec("at least one supplementary quantile is required".into()))?;
    let num = (-w.alpha).ln_1p() / (-mts.alpha).ln_1p();
    Ok(num.ln() / (w.t / mts.t).ln())
}

fn prior_median(m: f64, beta_tilde: f64) -> Result<f64> {
    Ok(beta_tilde * chi_square_quantile(2.0 * m, 0.5)? / (2.0 * m))
}

/// Shape calibration at virtual size `m` on a caller-owned uniform sample.
pub fn calibrate_beta_on(
    spec: &ExpertSpec,
    m: f64,
    opts: &CalibrationOptions,
    uniforms: &[f64],
) -> Result<BetaCalibration> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(domain("calibrate_beta", format!("m must be positive, got {m}")));
    }
    if let Some(aging) = spec.aging {
        let bt = beta_tilde_from_aging(m, aging.beta_e, aging.alpha_beta_e)?;
        let median = prior_median(m, bt)?;
        let obj = KlObjective::new(spec, m, median, uniforms)?;
        let eff = obj.effective_alphas(median)?;
        let err = discrete_kl(spec, &eff)?;
        return Ok(BetaCalibration {
            m,
            beta_e_star: median,
            beta_tilde_star: bt,
            err,
            effective_alphas: eff,
            interior: true,
            anchor_rounds: 1,
        });
    }

    let (lo, hi) = opts.beta_e_bracket(spec)?;
    let mut anchor = initial_anchor(spec)?.clamp(lo, hi);
    let n = uniforms.len() as f64;
    let trust = (opts.trust_ess_fraction * n).max(MIN_ESS);
    let edge = 10.0 * opts.tol;
    for round in 1..=opts.max_anchor_rounds {
        let obj = KlObjective::new(spec, m, anchor, uniforms)?;
        let (a, b) = trust_region(&obj, anchor, lo, hi, trust)?;
        let r = minimize_scalar(|x| obj.loss(x.exp()), a.ln(), b.ln(), opts.tol)?;
        if !r.min_value.is_finite() {
            return Err(Error::Solver(format!("no usable shape median at m = {m}")));
        }
        let be = r.argmin.exp();
        let pinned = (a > lo && (be / a).ln() <= edge) || (b < hi && (b / be).ln() <= edge);
        let settled = obj.ess(be)? >= opts.settle_ess_fraction * n;
        if (!pinned && settled) || round == opts.max_anchor_rounds {
            let eff = obj.effective_alphas(be)?;
            let err = discrete_kl(spec, &eff)?;
            return Ok(BetaCalibration {
                m,
                beta_e_star: be,
                beta_tilde_star: beta_tilde_from_median(m, be)?,
                err,
                effective_alphas: eff,
                interior: (be / lo).ln() > edge && (hi / be).ln() > edge,
                anchor_rounds: round,
            });
        }
        anchor = be;
    }
    unreachable!("the last round always returns")
}

/// Sub-bracket of [lo, hi] around the anchor where the weights keep an ESS of
/// at least `trust`. ESS is unimodal in the target median with its peak at the
/// anchor, so each side is found by bisection in log scale.
fn trust_region(obj: &KlObjective<'_>, anchor: f64, lo: f64, hi: f64, trust: f64) -> Result<(f64, f64)> {
    let ok = |x: f64| obj.ess(x).map(|e| e >= trust).unwrap_or(false);
    let side = |far: f64| -> f64 {
        if ok(far) {
            return far;
        }
        let (mut inside, mut outside) = (anchor.ln(), far.ln());
        for _ in 0..60 {
            let mid = 0.5 * (inside + outside);
            if ok(mid.exp()) {
                inside = mid;
            } else {
                outside = mid;
            }
            if (outside - inside).abs() < 1e-9 {
                break;
            }
        }
        inside.exp()
    };
    let a = side(lo);
    let b = side(hi);
    if !(b > a) {
        return Err(Error::Solver(format!("empty trust region around anchor {anchor}")));
    }
    Ok((a, b))
}

/// Shape calibration at virtual size `m`.
pub fn calibrate_beta(
    spec: &ExpertSpec,
    m: f64,
    opts: &CalibrationOptions,
    rng: &mut RandomStream,
) -> Result<BetaCalibration> {
    opts.validate()?;
    let u = rng.stratified(opts.mc_size);
    calibrate_beta_on(spec, m, opts, &u)
}

/// Expert incoherency risk Err(m).
pub fn err(spec: &ExpertSpec, m: f64, opts: &CalibrationOptions, rng: &mut RandomStream) -> Result<f64> {
    Ok(calibrate_beta(spec, m, opts, rng)?.err)
}

/// Output of the full (m, β̃) calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub spec: ExpertSpec,
    pub prior: WeibullPrior,
    pub m_star: f64,
    pub beta_tilde_star: f64,
    pub beta_e_star: f64,
    pub err_star: f64,
    /// Effective levels at the optimum, aligned with the spec quantiles.
    pub effective_alphas: Vec<f64>,
    pub coverage_error: f64,
    pub err_curve: Vec<(f64, f64)>,
    pub beta_curve: Vec<(f64, f64)>,
    pub diagnostics: Vec<String>,
    pub options: CalibrationOptions,
}

/// |1 − effective mass / stated mass| between the outermost statements.
pub fn coverage_error(spec: &ExpertSpec, effective: &[f64]) -> f64 {
    let first = spec.quantiles[0].alpha;
    let last = spec.quantiles[spec.quantiles.len() - 1].alpha;
    let eff = effective[effective.len() - 1] - effective[0];
    (1.0 - eff / (last - first)).abs()
}

/// Scans Err(m) on a log grid, refines the best cell with Brent and builds the report.
pub fn calibrate_m(spec: &ExpertSpec, opts: &CalibrationOptions, rng: &mut RandomStream) -> Result<CalibrationReport> {
    spec.validate()?;
    opts.validate()?;
    let uniforms = rng.stratified(opts.mc_size);
    let grid = opts.m_grid();
    let scan: Vec<Result<BetaCalibration>> = grid
        .par_iter()
        .map(|&m| calibrate_beta_on(spec, m, opts, &uniforms))
        .collect();

    let mut diagnostics = Vec::new();
    let mut err_curve = Vec::new();
    let mut beta_curve = Vec::new();
    let mut best: Option<(usize, BetaCalibration)> = None;
    for (i, r) in scan.into_iter().enumerate() {
        match r {
            Ok(c) => {
                err_curve.push((c.m, c.err));
                beta_curve.push((c.m, c.beta_tilde_star));
                if best.as_ref().is_none_or(|(_, b)| c.err < b.err) {
                    best = Some((i, c));
                }
            }
            Err(e) => diagnostics.push(format!("grid point m = {:.6} skipped: {e}", grid[i])),
        }
    }
    let (best_i, grid_best) =
        best.ok_or_else(|| Error::Solver("no grid point produced a finite loss".into()))?;

    let lo_err = err_curve.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi_err = err_curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if hi_err - lo_err < 1e-10 {
        diagnostics.push("Err(m) is flat over the grid; m is not identifiable".into());
    }

    let chosen = if let Some(fixed) = spec.fixed_m {
        diagnostics.push(format!("m fixed by the specification at {fixed}"));
        calibrate_beta_on(spec, fixed, opts, &uniforms)?
    } else {
        let a = grid[best_i.saturating_sub(1)];
        let b = grid[(best_i + 1).min(grid.len() - 1)];
        let r = minimize_scalar(
            |x| {
                calibrate_beta_on(spec, x.exp(), opts, &uniforms)
                    .map(|c| c.err)
                    .unwrap_or(f64::INFINITY)
            },
            a.ln(),
            b.ln(),
            opts.tol,
        )?;
        let refined = calibrate_beta_on(spec, r.argmin.exp(), opts, &uniforms);
        match refined {
            Ok(c) if c.err <= grid_best.err => c,
            _ => grid_best,
        }
    };
    if spec.fixed_m.is_none() && (best_i == 0 || best_i == grid.len() - 1) {
        diagnostics.push(format!(
            "Err(m) minimum at the edge of the search range (m = {:.6})",
            chosen.m
        ));
    }
    if !chosen.interior {
        diagnostics.push(format!(
            "shape median optimum {:.6} lies on the search bracket edge",
            chosen.beta_e_star
        ));
    }
    if spec.aging.is_some() {
        diagnostics.push("shape gamma mean taken from the aging statement".into());
    }

    let prior = build_prior(spec, chosen.m, chosen.beta_tilde_star)?;
    let report_u = rng.stratified(opts.report_mc_size);
    let obj = KlObjective::new(spec, chosen.m, chosen.beta_e_star, &report_u)?;
    let effective_alphas = obj.effective_alphas(chosen.beta_e_star)?;
    Ok(CalibrationReport {
        spec: spec.clone(),
        prior,
        m_star: chosen.m,
        beta_tilde_star: chosen.beta_tilde_star,
        beta_e_star: chosen.beta_e_star,
        err_star: chosen.err,
        coverage_error: coverage_error(spec, &effective_alphas),
        effective_alphas,
        err_curve,
        beta_curve,
        diagnostics,
        options: *opts,
    })
}
