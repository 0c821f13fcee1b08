//! Sampling primitives and special functions shared by the samplers.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_with_jitter, max_asymmetry};

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Multivariate normal with an explicit covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct MvnParams {
    pub mean: Vec<f64>,
    pub cov: DMatrix<f64>,
}

impl MvnParams {
    pub fn new(mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::invalid("covariance shape does not match mean"));
        }
        if max_asymmetry(&cov) > 1e-10 {
            return Err(Error::invalid("covariance is not symmetric"));
        }
        Ok(MvnParams { mean, cov })
    }

    pub fn isotropic(mean: Vec<f64>, var: f64) -> Self {
        let d = mean.len();
        MvnParams {
            mean,
            cov: DMatrix::from_diagonal_element(d, d, var),
        }
    }
}

/// Dirichlet concentration parameters, all strictly positive.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletParams {
    pub alpha: Vec<f64>,
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::invalid("Dirichlet needs at least one concentration"));
        }
        if alpha.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(Error::invalid("Dirichlet concentrations must be positive"));
        }
        Ok(DirichletParams { alpha })
    }

    pub fn mean(&self) -> Vec<f64> {
        let s: f64 = self.alpha.iter().sum();
        self.alpha.iter().map(|a| a / s).collect()
    }

    /// `E[ln x_i] = ψ(α_i) − ψ(Σα)`.
    pub fn expected_ln(&self) -> Vec<f64> {
        let total = digamma(self.alpha.iter().sum()).expect("positive total");
        self.alpha
            .iter()
            .map(|a| digamma(*a).expect("positive alpha") - total)
            .collect()
    }
}

pub fn standard_normal_vec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Draw from `N(mean, cov)`. A zero covariance returns the mean exactly;
/// a covariance with a materially negative eigenvalue is an error.
pub fn sample_mvn<R: Rng + ?Sized>(p: &MvnParams, rng: &mut R) -> Result<Vec<f64>> {
    let (l, _) = cholesky_with_jitter(&p.cov)?;
    let z = DVector::from_vec(standard_normal_vec(p.mean.len(), rng));
    let lz = l * z;
    Ok(p.mean.iter().zip(lz.iter()).map(|(m, v)| m + v).collect())
}

/// `ln Gamma(shape, 1)` draw. Shapes below one use the boost
/// `G(a) = G(a + 1) · U^{1/a}` in log space so tiny shapes cannot underflow.
fn ln_gamma_draw<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).expect("valid gamma shape");
        g.sample(rng).ln()
    } else {
        let g = Gamma::new(shape + 1.0, 1.0).expect("valid gamma shape");
        let u: f64 = rng.random::<f64>();
        // u in [0, 1); guard the exact-zero case
        let u = if u > 0.0 { u } else { f64::MIN_POSITIVE };
        g.sample(rng).ln() + u.ln() / shape
    }
}

/// Draw a probability vector from `Dir(alpha)`.
pub fn sample_dirichlet<R: Rng + ?Sized>(p: &DirichletParams, rng: &mut R) -> Vec<f64> {
    if p.alpha.len() == 1 {
        return vec![1.0];
    }
    let ln_g: Vec<f64> = p.alpha.iter().map(|a| ln_gamma_draw(*a, rng)).collect();
    let lse = log_sum_exp(&ln_g);
    let mut out: Vec<f64> = ln_g.iter().map(|v| (v - lse).exp()).collect();
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= s);
    out
}

/// Checked Dirichlet draw from raw concentrations.
pub fn sample_dirichlet_alpha<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let p = DirichletParams::new(alpha.to_vec())?;
    Ok(sample_dirichlet(&p, rng))
}

/// Draw a 0-based index with probability proportional to `p`.
pub fn sample_categorical<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> Result<usize> {
    let mut total = 0.0;
    for v in p {
        if !(*v >= 0.0) || !v.is_finite() {
            return Err(Error::invalid(
                "categorical weights must be finite and non-negative",
            ));
        }
        total += v;
    }
    if !(total > 0.0) {
        return Err(Error::invalid("categorical weights sum to zero"));
    }
    Ok(categorical_unchecked(p, total, rng))
}

/// Inverse-CDF draw for weights already known to be valid with sum `total`.
#[inline]
pub fn categorical_unchecked<R: Rng + ?Sized>(p: &[f64], total: f64, rng: &mut R) -> usize {
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > 0.0 {
            last_positive = i;
            acc += v;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Draw from a categorical given unnormalized log weights.
pub fn sample_log_categorical<R: Rng + ?Sized>(log_w: &[f64], rng: &mut R) -> usize {
    let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|v| (v - m).exp()).collect();
    let total: f64 = w.iter().sum();
    categorical_unchecked(&w, total, rng)
}

/// Digamma function ψ(x) for x > 0, by upward recurrence to x ≥ 10 and the
/// asymptotic series. Absolute error is below 1e-12 on (0, ∞).
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::invalid("digamma is defined here for finite x > 0"));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Bernoulli-number series: 1/12, 1/120, 1/252, 1/240, 1/132, 691/32760
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32760.0)))));
    Ok(acc + x.ln() - 0.5 * inv - series)
}

/// `ln Σ exp(v_i)` without overflow. `−∞` entries are allowed.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m == f64::INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Normalize log weights in place into probabilities; returns the
/// log normalizer.
pub fn normalize_log_weights(v: &mut [f64]) -> f64 {
    let lse = log_sum_exp(v);
    v.iter_mut().for_each(|x| *x = (*x - lse).exp());
    lse
}

/// `Σ (α_i − 1) ln p_i`, the Dirichlet log density up to its normalizer.
pub fn ln_dirichlet_kernel(p: &[f64], alpha: &[f64]) -> f64 {
    p.iter().zip(alpha).map(|(p, a)| (a - 1.0) * p.ln()).sum()
}

#[inline]
pub fn ln_normal_pdf(y: f64, mean: f64, var: f64) -> f64 {
    let r = y - mean;
    -0.5 * (LN_2PI + var.ln()) - 0.5 * r * r / var
}
