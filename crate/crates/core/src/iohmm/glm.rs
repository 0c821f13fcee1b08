//! Bernoulli GLM likelihood, Laplace approximation and the Laplace-proposal
//! Metropolis-Hastings weight update.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::data::ExperimentLog;
use crate::error::{Error, Result};
use crate::linalg::{dot, spd_cholesky, PrecisionGaussian};
use crate::randkit::standard_normal_vec;

pub use crate::mlr::WeightPrior as GlmPrior;

pub const NEWTON_MAX_STEPS: usize = 100;
pub const NEWTON_GRAD_TOL: f64 = 1e-8;

#[inline]
pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^a)` without overflow.
#[inline]
pub fn softplus(a: f64) -> f64 {
    if a > 0.0 {
        a + (-a).exp().ln_1p()
    } else {
        a.exp().ln_1p()
    }
}

/// `ln p(y | η)` for a Bernoulli with logit `η`.
#[inline]
pub fn bernoulli_ln_lik(y: f64, eta: f64) -> f64 {
    y * eta - softplus(eta)
}

/// `p(y = 1) = σ(w·x − b)` for a scalar stimulus with slope `w` and bias `b`.
pub fn bernoulli_glm_prob(x: f64, w: f64, b: f64) -> f64 {
    sigmoid(w * x - b)
}

/// `p(y = 1) = σ(w·x)` on augmented inputs.
pub fn prob(x: &[f64], w: &[f64]) -> f64 {
    sigmoid(dot(x, w))
}

/// `(slope, bias)` to the weight vector acting on `(x, 1)`.
pub fn to_augmented(slope: f64, bias: f64) -> Vec<f64> {
    vec![slope, -bias]
}

/// Weight vector acting on `(x, 1)` back to `(slope, bias)`.
pub fn from_augmented(w: &[f64]) -> (f64, f64) {
    (w[0], -w[1])
}

/// Log-likelihood with gradient and Hessian, as seen by the Laplace sampler.
pub trait LogLikelihood {
    fn dim(&self) -> usize;
    fn value(&self, w: &[f64]) -> f64;
    /// Value; gradient and Hessian are added into the supplied buffers.
    fn value_grad_hess(&self, w: &[f64], grad: &mut [f64], hess: &mut DMatrix<f64>) -> f64;
}

/// Optionally weighted Bernoulli GLM data.
#[derive(Clone, Debug)]
pub struct BernoulliData<'a> {
    dim: usize,
    xs: Vec<&'a [f64]>,
    ys: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl<'a> BernoulliData<'a> {
    pub fn new(dim: usize) -> Self {
        BernoulliData {
            dim,
            xs: Vec::new(),
            ys: Vec::new(),
            weights: None,
        }
    }

    pub fn from_log(log: &'a ExperimentLog) -> Self {
        let mut d = BernoulliData::new(log.dim());
        for r in log.trials() {
            d.push(&r.x, r.y);
        }
        d
    }

    /// Trials of `log` whose label in `z` equals `k`.
    pub fn subset(log: &'a ExperimentLog, z: &[usize], k: usize) -> Self {
        let mut d = BernoulliData::new(log.dim());
        for (r, &s) in log.trials().iter().zip(z) {
            if s == k {
                d.push(&r.x, r.y);
            }
        }
        d
    }

    /// All trials of `log`, weighted.
    pub fn weighted(log: &'a ExperimentLog, weights: Vec<f64>) -> Self {
        let mut d = BernoulliData::from_log(log);
        d.weights = Some(weights);
        d
    }

    pub fn push(&mut self, x: &'a [f64], y: f64) {
        self.xs.push(x);
        self.ys.push(y);
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    fn wt(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }
}

impl LogLikelihood for BernoulliData<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, w: &[f64]) -> f64 {
        (0..self.len())
            .map(|i| self.wt(i) * bernoulli_ln_lik(self.ys[i], dot(self.xs[i], w)))
            .sum()
    }

    fn value_grad_hess(&self, w: &[f64], grad: &mut [f64], hess: &mut DMatrix<f64>) -> f64 {
        let d = self.dim;
        let mut v = 0.0;
        for i in 0..self.len() {
            let c = self.wt(i);
            if c == 0.0 {
                continue;
            }
            let x = self.xs[i];
            let eta = dot(x, w);
            // one exponential serves both the sigmoid and the softplus
            let e = (-eta.abs()).exp();
            let p = if eta >= 0.0 {
                1.0 / (1.0 + e)
            } else {
                e / (1.0 + e)
            };
            v += c * (self.ys[i] * eta - (eta.max(0.0) + e.ln_1p()));
            let r = c * (self.ys[i] - p);
            let h = c * p * (1.0 - p);
            for a in 0..d {
                grad[a] += r * x[a];
                for b in 0..=a {
                    hess[(a, b)] -= h * x[a] * x[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                hess[(b, a)] = hess[(a, b)];
            }
        }
        v
    }
}

/// Quadratic log-likelihood `−½ (w − m)ᵀ Q (w − m)`, for which the Laplace
/// approximation is exact.
#[derive(Clone, Debug)]
pub struct GaussianSurrogate {
    pub mean: Vec<f64>,
    pub precision: DMatrix<f64>,
}

impl LogLikelihood for GaussianSurrogate {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn value(&self, w: &[f64]) -> f64 {
        let d = DVector::from_fn(w.len(), |i, _| w[i] - self.mean[i]);
        -0.5 * d.dot(&(&self.precision * &d))
    }

    fn value_grad_hess(&self, w: &[f64], grad: &mut [f64], hess: &mut DMatrix<f64>) -> f64 {
        let d = DVector::from_fn(w.len(), |i, _| w[i] - self.mean[i]);
        let qd = &self.precision * &d;
        for i in 0..w.len() {
            grad[i] -= qd[i];
        }
        *hess -= &self.precision;
        -0.5 * d.dot(&qd)
    }
}

/// Gaussian approximation at the posterior mode: mean `w_MAP`, precision
/// equal to the negative Hessian of the log posterior there.
#[derive(Clone, Debug)]
pub struct LaplaceProposal {
    pub gaussian: PrecisionGaussian,
    pub newton_steps: usize,
}

impl LaplaceProposal {
    pub fn map(&self) -> &DVector<f64> {
        &self.gaussian.mean
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        self.gaussian.covariance()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let e = DVector::from_vec(standard_normal_vec(self.gaussian.dim(), rng));
        self.gaussian.transform(&e).iter().copied().collect()
    }

    pub fn ln_q(&self, w: &[f64]) -> f64 {
        self.gaussian.unnormalized_ln_pdf(w)
    }
}

pub fn ln_posterior<L: LogLikelihood + ?Sized>(lik: &L, prior: &GlmPrior, w: &[f64]) -> f64 {
    lik.value(w) + prior.ln_density(w)
}

fn value_grad_hess_post<L: LogLikelihood + ?Sized>(
    lik: &L,
    prior: &GlmPrior,
    w: &[f64],
    grad: &mut [f64],
    hess: &mut DMatrix<f64>,
) -> f64 {
    let d = w.len();
    grad.iter_mut().for_each(|g| *g = 0.0);
    hess.fill(0.0);
    let inv0 = 1.0 / prior.sigma0_sq;
    let v = lik.value_grad_hess(w, grad, hess);
    for i in 0..d {
        grad[i] -= inv0 * (w[i] - prior.w0[i]);
        hess[(i, i)] -= inv0;
    }
    v + prior.ln_density(w)
}

/// Newton ascent with step halving to the posterior mode, then the Laplace
/// proposal there.
pub fn laplace_fit<L: LogLikelihood + ?Sized>(
    lik: &L,
    prior: &GlmPrior,
    start: &[f64],
) -> Result<LaplaceProposal> {
    let d = lik.dim();
    if prior.dim() != d || start.len() != d {
        return Err(Error::invalid("prior, start and data dimensions disagree"));
    }
    let mut w = start.to_vec();
    let mut grad = vec![0.0; d];
    let mut hess = DMatrix::<f64>::zeros(d, d);
    let mut f = value_grad_hess_post(lik, prior, &w, &mut grad, &mut hess);
    let mut trial = vec![0.0; d];
    for step in 0..=NEWTON_MAX_STEPS {
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let neg_h = -hess.clone();
        if gnorm < NEWTON_GRAD_TOL {
            let gaussian = PrecisionGaussian::with_mean(&neg_h, DVector::from_vec(w))?;
            return Ok(LaplaceProposal {
                gaussian,
                newton_steps: step,
            });
        }
        if step == NEWTON_MAX_STEPS {
            break;
        }
        let chol = spd_cholesky(&neg_h)?;
        let delta = chol.solve(&DVector::from_column_slice(&grad));
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            for i in 0..d {
                trial[i] = w[i] + t * delta[i];
            }
            let ft = ln_posterior(lik, prior, &trial);
            if ft >= f {
                moved = true;
                break;
            }
            t *= 0.5;
        }
        let size = delta.norm() * t;
        if !moved || size <= 1e-14 * (1.0 + w.iter().map(|v| v * v).sum::<f64>().sqrt()) {
            // No further ascent is representable: accept the current point.
            let gaussian = PrecisionGaussian::with_mean(&neg_h, DVector::from_vec(w))?;
            return Ok(LaplaceProposal {
                gaussian,
                newton_steps: step,
            });
        }
        w.copy_from_slice(&trial);
        f = value_grad_hess_post(lik, prior, &w, &mut grad, &mut hess);
    }
    Err(Error::numerical(format!(
        "Newton optimizer did not converge in {NEWTON_MAX_STEPS} steps"
    )))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MhOutcome {
    pub w: Vec<f64>,
    pub accepted: bool,
    /// `ln` of the Metropolis-Hastings ratio before truncation at zero.
    pub ln_ratio: f64,
}

/// Independence Metropolis-Hastings step with a fixed Laplace proposal.
pub fn mh_step<L: LogLikelihood + ?Sized, R: Rng + ?Sized>(
    lik: &L,
    prior: &GlmPrior,
    proposal: &LaplaceProposal,
    w_old: &[f64],
    rng: &mut R,
) -> MhOutcome {
    let w_new = proposal.draw(rng);
    mh_accept(lik, prior, proposal, w_old, w_new, rng)
}

/// Accept or reject a given proposal `w_new` against `w_old`.
pub fn mh_accept<L: LogLikelihood + ?Sized, R: Rng + ?Sized>(
    lik: &L,
    prior: &GlmPrior,
    proposal: &LaplaceProposal,
    w_old: &[f64],
    w_new: Vec<f64>,
    rng: &mut R,
) -> MhOutcome {
    let ln_ratio = if w_new.as_slice() == w_old {
        0.0
    } else {
        ln_posterior(lik, prior, &w_new) - ln_posterior(lik, prior, w_old) + proposal.ln_q(w_old)
            - proposal.ln_q(&w_new)
    };
    let u: f64 = rng.random();
    let accepted = ln_ratio >= 0.0 || u.ln() < ln_ratio;
    MhOutcome {
        w: if accepted { w_new } else { w_old.to_vec() },
        accepted,
        ln_ratio,
    }
}

/// One weight update: Laplace fit warm-started at `w_old`, a proposal from
/// it, and the Metropolis-Hastings correction.
pub fn glm_sample_posterior<L: LogLikelihood + ?Sized, R: Rng + ?Sized>(
    lik: &L,
    prior: &GlmPrior,
    w_old: &[f64],
    rng: &mut R,
) -> Result<MhOutcome> {
    let proposal = laplace_fit(lik, prior, w_old)?;
    Ok(mh_step(lik, prior, &proposal, w_old, rng))
}
