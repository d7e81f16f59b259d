use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::RandomStream;

/// Weibull law with scale `eta` and shape `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    pub eta: f64,
    pub beta: f64,
}

impl WeibullParams {
    pub fn new(eta: f64, beta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(domain("weibull", format!("scale must be positive, got {eta}")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(domain("weibull", format!("shape must be positive, got {beta}")));
        }
        Ok(Self { eta, beta })
    }

    /// (t/η)^β computed as exp(β ln(t/η)).
    fn ln_ratio_pow(&self, t: f64) -> f64 {
        self.beta * (t / self.eta).ln()
    }

    pub fn ln_pdf(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(if self.beta < 1.0 {
                f64::INFINITY
            } else if self.beta == 1.0 {
                -self.eta.ln()
            } else {
                f64::NEG_INFINITY
            });
        }
        let lz = self.ln_ratio_pow(t);
        Ok(self.beta.ln() - t.ln() + lz - lz.exp())
    }

    pub fn pdf(&self, t: f64) -> Result<f64> {
        Ok(self.ln_pdf(t)?.exp())
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(-(-self.ln_ratio_pow(t).exp()).exp_m1())
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(domain("weibull_quantile", format!("q must lie in (0,1), got {q}")));
        }
        Ok(self.eta * (-(-q).ln_1p()).powf(1.0 / self.beta))
    }

    /// Draw by inversion.
    pub fn sample(&self, rng: &mut RandomStream) -> f64 {
        let u = rng.open01();
        self.eta * (-u.ln()).powf(1.0 / self.beta)
    }

    pub fn mean(&self) -> f64 {
        self.eta * crate::numerics::ln_gamma_unchecked(1.0 + 1.0 / self.beta).exp()
    }

    pub fn mode(&self) -> f64 {
        if self.beta <= 1.0 {
            0.0
        } else {
            self.eta * ((self.beta - 1.0) / self.beta).powf(1.0 / self.beta)
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(domain("weibull", format!("time must be non-negative, got {t}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pdf_at_scale_for_exponential() {
        let w = WeibullParams::new(3.0, 1.0).unwrap();
        assert!((w.pdf(3.0).unwrap() - (-1.0f64).exp() / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cdf_at_scale() {
        let w = WeibullParams::new(140.8, 4.51).unwrap();
        assert!((w.cdf(140.8).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn median_formula() {
        for &beta in &[0.3, 1.0, 4.9, 16.5] {
            let w = WeibullParams::new(250.0 * 2f64.ln().powf(-1.0 / beta), beta).unwrap();
            assert!((w.quantile(0.5).unwrap() - 250.0).abs() < 1e-9);
        }
    }

    #[test]
    fn large_shape_does_not_overflow() {
        let w = WeibullParams::new(250.0, 20.0).unwrap();
        let d = w.pdf(500.0).unwrap();
        assert!(d.is_finite() && d >= 0.0);
        assert!(w.cdf(500.0).unwrap() <= 1.0);
    }

    #[test]
    fn domain_errors() {
        let w = WeibullParams::new(1.0, 2.0).unwrap();
        assert!(w.pdf(-1.0).is_err());
        assert!(w.cdf(-0.5).is_err());
        assert!(w.quantile(1.0).is_err());
        assert!(WeibullParams::new(0.0, 1.0).is_err());
    }
}
