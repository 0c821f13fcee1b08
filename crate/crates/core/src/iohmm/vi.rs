//! Mean-field variational inference for the Bernoulli IO-HMM.
//!
//! `q(π₀) q(A) q(w) q(z)` with Dirichlet factors for `π₀` and each row of
//! `A`, a Gaussian per state for the weights, and a structured `q(z)`
//! obtained by forward-backward on `π̃₀ = exp E[ln π₀]`, `Ã = exp E[ln A]`
//! and `L̃ = exp E[ln p(y | w, x)]`. The expectation over `w` uses a fixed
//! set of standard-normal draws per state for the whole run, which keeps
//! the iteration deterministic.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::gibbs::prior_weight;
use super::glm::{bernoulli_ln_lik, laplace_fit, BernoulliData, GlmPrior};
use super::hmm::forward_backward;
use super::IoHmmParams;
use crate::config::ExperimentConfig;
use crate::data::ExperimentLog;
use crate::error::{Error, Result};
use crate::infomax::{ParamBundle, ParamSampleSet};
use crate::linalg::{cholesky_with_jitter, dot};
use crate::randkit::{digamma, sample_dirichlet_alpha, standard_normal_vec};

pub const MC_DRAWS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct IoHmmViConfig {
    pub k: usize,
    pub prior: GlmPrior,
    pub alpha: Vec<Vec<f64>>,
    pub alpha_pi0: Vec<f64>,
    pub max_iters: usize,
    pub tol: f64,
    pub mc_draws: usize,
}

impl IoHmmViConfig {
    pub fn from_experiment(c: &ExperimentConfig) -> Self {
        IoHmmViConfig {
            k: c.k,
            prior: GlmPrior {
                w0: c.w0.clone(),
                sigma0_sq: c.sigma0_sq,
            },
            alpha: c.alpha.clone(),
            alpha_pi0: c.alpha_pi.clone(),
            max_iters: c.vi_max_iters,
            tol: c.vi_tol,
            mc_draws: MC_DRAWS,
        }
    }

    pub fn with_defaults(k: usize, d: usize) -> Self {
        IoHmmViConfig {
            k,
            prior: GlmPrior::isotropic(d, 10.0),
            alpha: vec![vec![1.0; k]; k],
            alpha_pi0: vec![1.0; k],
            max_iters: 500,
            tol: 1e-6,
            mc_draws: MC_DRAWS,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IoHmmVariationalState {
    pub alpha_pi0: Vec<f64>,
    pub alpha_a: Vec<Vec<f64>>,
    pub w_mean: Vec<Vec<f64>>,
    pub w_cov: Vec<DMatrix<f64>>,
    /// Unary marginals `q(z_t = k)`.
    pub gamma: Vec<Vec<f64>>,
    /// Pairwise marginals `q(z_{t−1} = j, z_t = k)` for `t = 2..T`.
    pub xi: Vec<Vec<Vec<f64>>>,
    pub iterations: usize,
    pub converged: bool,
    /// Forward-backward log normalizer after each iteration.
    pub objective_trace: Vec<f64>,
}

impl IoHmmVariationalState {
    pub fn k(&self) -> usize {
        self.w_mean.len()
    }

    /// Parameters at the variational means.
    pub fn mean_params(&self) -> IoHmmParams {
        let norm = |v: &[f64]| {
            let s: f64 = v.iter().sum();
            v.iter().map(|a| a / s).collect::<Vec<f64>>()
        };
        IoHmmParams {
            weights: self.w_mean.clone(),
            a: self.alpha_a.iter().map(|r| norm(r)).collect(),
            pi0: norm(&self.alpha_pi0),
        }
    }
}

/// `exp(ψ(α_i) − ψ(Σα))` for each entry.
pub fn tilde(alpha: &[f64]) -> Result<Vec<f64>> {
    let total = digamma(alpha.iter().sum())?;
    alpha
        .iter()
        .map(|a| Ok((digamma(*a)? - total).exp()))
        .collect()
}

pub fn init_state<R: Rng + ?Sized>(cfg: &IoHmmViConfig, rng: &mut R) -> IoHmmVariationalState {
    let d = cfg.prior.dim();
    IoHmmVariationalState {
        alpha_pi0: cfg.alpha_pi0.clone(),
        alpha_a: cfg.alpha.clone(),
        w_mean: (0..cfg.k).map(|_| prior_weight(&cfg.prior, rng)).collect(),
        w_cov: vec![DMatrix::from_diagonal_element(d, d, cfg.prior.sigma0_sq); cfg.k],
        gamma: Vec::new(),
        xi: Vec::new(),
        iterations: 0,
        converged: false,
        objective_trace: Vec::new(),
    }
}

/// `ln L̃_{t,k}`: average Bernoulli log-likelihood over the fixed draws from
/// `q(w_k)`.
fn expected_loglik(
    log: &ExperimentLog,
    s: &IoHmmVariationalState,
    eps: &[Vec<Vec<f64>>],
) -> Result<Vec<Vec<f64>>> {
    let k = s.k();
    let mut draws: Vec<Vec<Vec<f64>>> = Vec::with_capacity(k);
    for j in 0..k {
        let (l, _) = cholesky_with_jitter(&s.w_cov[j])?;
        draws.push(
            eps[j]
                .iter()
                .map(|e| {
                    let v = &l * DVector::from_column_slice(e);
                    s.w_mean[j]
                        .iter()
                        .zip(v.iter())
                        .map(|(m, x)| m + x)
                        .collect()
                })
                .collect(),
        );
    }
    Ok(log
        .trials()
        .iter()
        .map(|r| {
            (0..k)
                .map(|j| {
                    let n = draws[j].len() as f64;
                    draws[j]
                        .iter()
                        .map(|w| bernoulli_ln_lik(r.y, dot(&r.x, w)))
                        .sum::<f64>()
                        / n
                })
                .collect()
        })
        .collect())
}

/// Iterate until the relative change of the forward-backward log normalizer
/// falls below `cfg.tol` or `cfg.max_iters` is reached.
pub fn run<R: Rng + ?Sized>(
    log: &ExperimentLog,
    cfg: &IoHmmViConfig,
    init: Option<&IoHmmVariationalState>,
    rng: &mut R,
) -> Result<IoHmmVariationalState> {
    if log.is_empty() {
        return Err(Error::invalid(
            "variational inference needs at least one trial",
        ));
    }
    if cfg.prior.dim() != log.dim() {
        return Err(Error::config(
            "prior mean length does not match the input dimension",
        ));
    }
    let d = cfg.prior.dim();
    let k = cfg.k;
    let mut s = match init {
        Some(w) if w.k() == k => {
            let mut s = w.clone();
            s.iterations = 0;
            s.converged = false;
            s.objective_trace.clear();
            s
        }
        Some(_) => return Err(Error::invalid("warm state has the wrong number of states")),
        None => init_state(cfg, rng),
    };
    let draws = cfg.mc_draws.max(1);
    let eps: Vec<Vec<Vec<f64>>> = (0..k)
        .map(|_| (0..draws).map(|_| standard_normal_vec(d, rng)).collect())
        .collect();
    let mut prev: Option<f64> = None;
    for _ in 0..cfg.max_iters {
        let pi_t = tilde(&s.alpha_pi0)?;
        let a_t: Vec<Vec<f64>> = s.alpha_a.iter().map(|r| tilde(r)).collect::<Result<_>>()?;
        let ln_l = expected_loglik(log, &s, &eps)?;
        let msgs = forward_backward(&ln_l, &pi_t, &a_t)?;
        s.gamma = msgs.posteriors();
        s.xi = (1..log.len()).map(|t| msgs.pairwise(&a_t, t)).collect();

        s.alpha_pi0 = cfg
            .alpha_pi0
            .iter()
            .zip(&s.gamma[0])
            .map(|(a, g)| a + g)
            .collect();
        s.alpha_a = cfg.alpha.clone();
        for xi in &s.xi {
            for j in 0..k {
                for l in 0..k {
                    s.alpha_a[j][l] += xi[j][l];
                }
            }
        }

        for j in 0..k {
            let wts: Vec<f64> = s.gamma.iter().map(|g| g[j]).collect();
            let data = BernoulliData::weighted(log, wts);
            let fit = laplace_fit(&data, &cfg.prior, &s.w_mean[j])?;
            s.w_mean[j] = fit.map().iter().copied().collect();
            s.w_cov[j] = fit.covariance();
        }

        let obj = msgs.log_marginal();
        s.iterations += 1;
        s.objective_trace.push(obj);
        if let Some(p) = prev {
            if (obj - p).abs() <= cfg.tol * p.abs().max(1.0) {
                s.converged = true;
                break;
            }
        }
        prev = Some(obj);
    }
    Ok(s)
}

/// `m` independent draws of `(w, A, π₀)` from the variational factors.
pub fn sample<R: Rng + ?Sized>(
    s: &IoHmmVariationalState,
    m: usize,
    rng: &mut R,
) -> Result<ParamSampleSet> {
    let k = s.k();
    let chols: Vec<DMatrix<f64>> = s
        .w_cov
        .iter()
        .map(|c| cholesky_with_jitter(c).map(|(l, _)| l))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let weights = (0..k)
            .map(|j| {
                let e = DVector::from_vec(standard_normal_vec(s.w_mean[j].len(), rng));
                let v = &chols[j] * e;
                s.w_mean[j]
                    .iter()
                    .zip(v.iter())
                    .map(|(a, b)| a + b)
                    .collect()
            })
            .collect();
        let a = s
            .alpha_a
            .iter()
            .map(|r| sample_dirichlet_alpha(r, rng))
            .collect::<Result<Vec<_>>>()?;
        let pi0 = sample_dirichlet_alpha(&s.alpha_pi0, rng)?;
        out.push(ParamBundle::IoHmm(IoHmmParams { weights, a, pi0 }));
    }
    ParamSampleSet::single_chain(out)
}
