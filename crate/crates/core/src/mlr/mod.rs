//! Mixture of linear regressions: `z ~ Cat(π)`, `y | x, z=k ~ N(x·w_k, σ²)`.

pub mod gibbs;
pub mod vi;

pub use gibbs::{MlrGibbsConfig, MlrGibbsState};
pub use vi::{MlrVariationalState, MlrViConfig};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::randkit::{ln_normal_pdf, log_sum_exp};

#[derive(Clone, Debug, PartialEq)]
pub struct MlrParams {
    pub weights: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
    pub sigma_sq: f64,
}

impl MlrParams {
    pub fn new(weights: Vec<Vec<f64>>, pi: Vec<f64>, sigma_sq: f64) -> Result<Self> {
        let p = MlrParams {
            weights,
            pi,
            sigma_sq,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.first().map(|w| w.len()).unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() || self.weights.len() != self.pi.len() {
            return Err(Error::invalid("need one weight vector per mixing weight"));
        }
        let d = self.dim();
        if d == 0 || self.weights.iter().any(|w| w.len() != d) {
            return Err(Error::invalid(
                "weight vectors must share a positive length",
            ));
        }
        check_simplex(&self.pi, "pi")?;
        if !(self.sigma_sq > 0.0) {
            return Err(Error::invalid("sigma_sq must be positive"));
        }
        Ok(())
    }

    pub fn predictive(&self, x: &[f64]) -> MixturePredictive {
        MixturePredictive {
            means: self.weights.iter().map(|w| dot(x, w)).collect(),
            weights: self.pi.clone(),
            sigma_sq: self.sigma_sq,
        }
    }
}

pub(crate) fn check_simplex(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::invalid(format!(
            "{what} has a negative or NaN entry"
        )));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

/// Gaussian prior `N(w0, σ₀² I)` on a weight vector.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightPrior {
    pub w0: Vec<f64>,
    pub sigma0_sq: f64,
}

impl WeightPrior {
    pub fn new(w0: Vec<f64>, sigma0_sq: f64) -> Result<Self> {
        if !(sigma0_sq > 0.0) {
            return Err(Error::invalid("prior variance must be positive"));
        }
        Ok(WeightPrior { w0, sigma0_sq })
    }

    pub fn isotropic(d: usize, sigma0_sq: f64) -> Self {
        WeightPrior {
            w0: vec![0.0; d],
            sigma0_sq,
        }
    }

    pub fn dim(&self) -> usize {
        self.w0.len()
    }

    pub fn ln_density(&self, w: &[f64]) -> f64 {
        let r2: f64 = w.iter().zip(&self.w0).map(|(a, b)| (a - b) * (a - b)).sum();
        -0.5 * r2 / self.sigma0_sq
    }
}

/// `ln N(y | x·w, σ²)`.
pub fn component_loglik(x: &[f64], y: f64, w: &[f64], sigma_sq: f64) -> f64 {
    ln_normal_pdf(y, dot(x, w), sigma_sq)
}

/// Mixture of Gaussians with common variance: the MLR predictive density at a
/// fixed input.
#[derive(Clone, Debug, PartialEq)]
pub struct MixturePredictive {
    pub means: Vec<f64>,
    pub weights: Vec<f64>,
    pub sigma_sq: f64,
}

impl MixturePredictive {
    pub fn ln_pdf(&self, y: f64) -> f64 {
        let terms: Vec<f64> = self
            .means
            .iter()
            .zip(&self.weights)
            .map(|(m, p)| p.ln() + ln_normal_pdf(y, *m, self.sigma_sq))
            .collect();
        log_sum_exp(&terms)
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.ln_pdf(y).exp()
    }

    /// Posterior responsibilities `p(z = k | y)`.
    pub fn responsibilities(&self, y: f64) -> Vec<f64> {
        let mut terms: Vec<f64> = self
            .means
            .iter()
            .zip(&self.weights)
            .map(|(m, p)| p.ln() + ln_normal_pdf(y, *m, self.sigma_sq))
            .collect();
        crate::randkit::normalize_log_weights(&mut terms);
        terms
    }
}
