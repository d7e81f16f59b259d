use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::{
    gamma_quantile, gamma_quantile_upper, incomplete_gamma_pair, ln_gamma_unchecked, RandomStream,
};

fn check_shape_rate(what: &'static str, shape: f64, rate: f64) -> Result<()> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(domain(what, format!("shape must be positive, got {shape}")));
    }
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(domain(what, format!("rate must be positive, got {rate}")));
    }
    Ok(())
}

/// Log density of Gamma(shape, rate) at `x > 0`.
pub fn gamma_ln_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma_unchecked(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// Natural log of a Gamma(shape, 1) variate.
///
/// Marsaglia-Tsang squeeze for shape >= 1; below 1 the boost
/// G(a) = G(a + 1) U^{1/a} is applied in log space so tiny shapes do not
/// underflow.
pub fn ln_standard_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        let u: f64 = open01(rng);
        return ln_standard_gamma(shape + 1.0, rng) + u.ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * z;
        if v <= 0.0 {
            continue;
        }
        let v3 = v * v * v;
        let u = open01(rng);
        let z2 = z * z;
        if u < 1.0 - 0.0331 * z2 * z2 || u.ln() < 0.5 * z2 + d * (1.0 - v3 + v3.ln()) {
            return d.ln() + v3.ln();
        }
    }
}

fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Gamma(shape, rate) draw.
pub fn gamma_sample<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    check_shape_rate("gamma_sample", shape, rate)?;
    Ok((ln_standard_gamma(shape, rng) - rate.ln()).exp())
}

/// Inverse-gamma IG(shape, scale) draw: the reciprocal of a Gamma(shape, rate = scale) draw.
pub fn inverse_gamma_sample<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64> {
    check_shape_rate("inverse_gamma_sample", shape, scale)?;
    Ok((scale.ln() - ln_standard_gamma(shape, rng)).exp())
}

/// Gamma distribution restricted to `[lower, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedGammaParams {
    pub shape: f64,
    pub rate: f64,
    pub lower: f64,
}

impl TruncatedGammaParams {
    pub fn new(shape: f64, rate: f64, lower: f64) -> Result<Self> {
        check_shape_rate("truncated_gamma", shape, rate)?;
        if !(lower >= 0.0) || !lower.is_finite() {
            return Err(domain("truncated_gamma", format!("lower bound must be non-negative, got {lower}")));
        }
        Ok(Self { shape, rate, lower })
    }

    /// Mass of the untruncated gamma above `lower`.
    pub fn tail_mass(&self) -> f64 {
        incomplete_gamma_pair(self.shape, self.rate * self.lower).1
    }

    fn checked_tail_mass(&self) -> Result<f64> {
        let s = self.tail_mass();
        if !(s >= 1e-300) {
            return Err(Error::DegenerateSupport(format!(
                "Gamma({}, {}) has tail mass {s:e} above {}",
                self.shape, self.rate, self.lower
            )));
        }
        Ok(s)
    }

    /// Normalized log density; `-inf` below the truncation point.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x < self.lower {
            return f64::NEG_INFINITY;
        }
        gamma_ln_pdf(x, self.shape, self.rate) - self.tail_mass().ln()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lower {
            return 0.0;
        }
        let s0 = self.tail_mass();
        let sx = incomplete_gamma_pair(self.shape, self.rate * x).1;
        ((s0 - sx) / s0).clamp(0.0, 1.0)
    }

    /// Inverse CDF on the renormalized tail; `u` in (0, 1).
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(domain("truncated_gamma_quantile", format!("u must lie in (0,1), got {u}")));
        }
        if self.lower == 0.0 {
            return gamma_quantile(self.shape, self.rate, u);
        }
        let s0 = self.checked_tail_mass()?;
        // upper-tail mass left above the draw
        let s = s0 * (1.0 - u);
        let x = gamma_quantile_upper(self.shape, self.rate, s)?;
        Ok(x.max(self.lower))
    }

    pub fn sample(&self, rng: &mut RandomStream) -> Result<f64> {
        let u = rng.open01();
        self.quantile(u)
    }

    /// Closed-form mean of the truncated law.
    pub fn mean(&self) -> f64 {
        let z = self.rate * self.lower;
        let s1 = incomplete_gamma_pair(self.shape + 1.0, z).1;
        let s0 = incomplete_gamma_pair(self.shape, z).1;
        self.shape / self.rate * s1 / s0
    }
}
