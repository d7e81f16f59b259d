use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A predictive percentile statement: P(T ≤ t) = alpha.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileSpec {
    pub alpha: f64,
    pub t: f64,
}

impl QuantileSpec {
    pub fn new(alpha: f64, t: f64) -> Result<Self> {
        let q = Self { alpha, t };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidSpec(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(Error::InvalidSpec(format!("quantile time must be positive, got {}", self.t)));
        }
        Ok(())
    }
}

/// Optional aging statement: P(β ≥ beta_e) = alpha_beta_e.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgingInfo {
    pub beta_e: f64,
    pub alpha_beta_e: f64,
}

/// One expert's quantile statements, including the most trustworthy one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertSpec {
    pub name: String,
    pub quantiles: Vec<QuantileSpec>,
    pub mts_index: usize,
    #[serde(default)]
    pub beta0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aging: Option<AgingInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_m: Option<f64>,
}

impl ExpertSpec {
    /// Builds a validated spec with `beta0 = 0` and no aging or fixed size.
    pub fn new(name: impl Into<String>, quantiles: Vec<QuantileSpec>, mts_index: usize) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            quantiles,
            mts_index,
            beta0: 0.0,
            aging: None,
            fixed_m: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_beta0(mut self, beta0: f64) -> Result<Self> {
        self.beta0 = beta0;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.quantiles.is_empty() {
            return Err(Error::InvalidSpec("no quantiles given".into()));
        }
        for q in &self.quantiles {
            q.validate()?;
        }
        for w in self.quantiles.windows(2) {
            if !(w[1].alpha > w[0].alpha && w[1].t > w[0].t) {
                return Err(Error::InvalidSpec(format!(
                    "quantiles must increase in both alpha and t: ({}, {}) then ({}, {})",
                    w[0].alpha, w[0].t, w[1].alpha, w[1].t
                )));
            }
        }
        if self.mts_index >= self.quantiles.len() {
            return Err(Error::InvalidSpec(format!(
                "mts_index {} out of range for {} quantiles",
                self.mts_index,
                self.quantiles.len()
            )));
        }
        if !(self.beta0 >= 0.0) || !self.beta0.is_finite() {
            return Err(Error::InvalidSpec(format!("beta0 must be non-negative, got {}", self.beta0)));
        }
        if let Some(a) = &self.aging {
            if !(a.beta_e > 0.0) || !a.beta_e.is_finite() {
                return Err(Error::InvalidSpec(format!("aging beta_e must be positive, got {}", a.beta_e)));
            }
            if !(a.alpha_beta_e > 0.0 && a.alpha_beta_e < 1.0) {
                return Err(Error::InvalidSpec(format!(
                    "aging alpha_beta_e must lie in (0,1), got {}",
                    a.alpha_beta_e
                )));
            }
        }
        if let Some(m) = self.fixed_m {
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::InvalidSpec(format!("fixed_m must be positive, got {m}")));
            }
        }
        Ok(())
    }

    pub fn mts(&self) -> QuantileSpec {
        self.quantiles[self.mts_index]
    }

    /// The non-MTS statements.
    pub fn supplementary(&self) -> impl Iterator<Item = (usize, &QuantileSpec)> {
        let mts = self.mts_index;
        self.quantiles.iter().enumerate().filter(move |(i, _)| *i != mts)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }
}
