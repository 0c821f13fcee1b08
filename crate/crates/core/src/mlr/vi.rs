//! Mean-field variational inference for the mixture of linear regressions.
//!
//! The approximate posterior factorizes as `Π_t q(z_t) Π_k q(w_k)` with
//! categorical `q(z_t) = φ_t` and Gaussian `q(w_k) = N(μ_k, Σ_k)`. Mixing
//! weights are a point estimate `π̂ = mean_t φ_t` updated alongside. Each
//! iteration updates `q(w)`, then `π̂`, then `φ`; all three steps are exact
//! coordinate maximizations of the evidence lower bound, which is tracked
//! for convergence.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{MlrParams, WeightPrior};
use crate::config::ExperimentConfig;
use crate::data::ExperimentLog;
use crate::error::{Error, Result};
use crate::infomax::{ParamBundle, ParamSampleSet};
use crate::linalg::{cholesky_with_jitter, dot, ln_det_spd, spd_cholesky};
use crate::randkit::{
    categorical_unchecked, normalize_log_weights, sample_dirichlet_alpha, standard_normal_vec,
    LN_2PI,
};

#[derive(Clone, Debug, PartialEq)]
pub struct MlrViConfig {
    pub k: usize,
    pub prior: WeightPrior,
    pub sigma_sq: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl MlrViConfig {
    pub fn from_experiment(c: &ExperimentConfig) -> Self {
        MlrViConfig {
            k: c.k,
            prior: WeightPrior {
                w0: c.w0.clone(),
                sigma0_sq: c.sigma0_sq,
            },
            sigma_sq: c.sigma_sq,
            max_iters: c.vi_max_iters,
            tol: c.vi_tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlrVariationalState {
    /// T×K responsibilities.
    pub phi: Vec<Vec<f64>>,
    pub mu: Vec<Vec<f64>>,
    pub sigma: Vec<DMatrix<f64>>,
    pub pi_hat: Vec<f64>,
    pub sigma_sq: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Evidence lower bound after each completed iteration.
    pub elbo_trace: Vec<f64>,
}

impl MlrVariationalState {
    pub fn k(&self) -> usize {
        self.mu.len()
    }

    /// Parameters at the variational means.
    pub fn mean_params(&self) -> MlrParams {
        MlrParams {
            weights: self.mu.clone(),
            pi: self.pi_hat.clone(),
            sigma_sq: self.sigma_sq,
        }
    }
}

/// Perturbed-uniform responsibilities, prior moments for every `q(w_k)`.
pub fn init_state<R: Rng + ?Sized>(
    log: &ExperimentLog,
    cfg: &MlrViConfig,
    rng: &mut R,
) -> Result<MlrVariationalState> {
    let k = cfg.k;
    let d = cfg.prior.dim();
    let ones = vec![1.0; k];
    let mut phi = Vec::with_capacity(log.len());
    for _ in 0..log.len() {
        let noise = sample_dirichlet_alpha(&ones, rng)?;
        phi.push(
            noise
                .iter()
                .map(|e| 0.99 / k as f64 + 0.01 * e)
                .collect::<Vec<f64>>(),
        );
    }
    let pi_hat = column_means(&phi, k);
    Ok(MlrVariationalState {
        phi,
        mu: vec![cfg.prior.w0.clone(); k],
        sigma: vec![DMatrix::from_diagonal_element(d, d, cfg.prior.sigma0_sq); k],
        pi_hat,
        sigma_sq: cfg.sigma_sq,
        iterations: 0,
        converged: false,
        elbo_trace: Vec::new(),
    })
}

fn column_means(phi: &[Vec<f64>], k: usize) -> Vec<f64> {
    if phi.is_empty() {
        return vec![1.0 / k as f64; k];
    }
    let mut m = vec![0.0; k];
    for row in phi {
        for j in 0..k {
            m[j] += row[j];
        }
    }
    let n = phi.len() as f64;
    m.iter_mut().for_each(|v| *v /= n);
    m
}

fn update_w(log: &ExperimentLog, s: &mut MlrVariationalState, cfg: &MlrViConfig) -> Result<()> {
    let d = cfg.prior.dim();
    let inv0 = 1.0 / cfg.prior.sigma0_sq;
    let inv = 1.0 / cfg.sigma_sq;
    for k in 0..cfg.k {
        let mut p = DMatrix::<f64>::from_diagonal_element(d, d, inv0);
        let mut b = DVector::from_fn(d, |i, _| inv0 * cfg.prior.w0[i]);
        for (rec, row) in log.trials().iter().zip(&s.phi) {
            let r = row[k] * inv;
            if r == 0.0 {
                continue;
            }
            for i in 0..d {
                for j in 0..=i {
                    p[(i, j)] += r * rec.x[i] * rec.x[j];
                }
                b[i] += r * rec.x[i] * rec.y;
            }
        }
        for i in 0..d {
            for j in 0..i {
                p[(j, i)] = p[(i, j)];
            }
        }
        let chol = spd_cholesky(&p)?;
        let mu = chol.solve(&b);
        s.mu[k] = mu.iter().copied().collect();
        s.sigma[k] = chol.inverse();
    }
    Ok(())
}

/// Expected squared prediction `E[(x·w_k)²] = (x·μ_k)² + xᵀΣ_k x`.
fn expected_sq(x: &[f64], mu: &[f64], sigma: &DMatrix<f64>) -> (f64, f64) {
    let m = dot(x, mu);
    let d = x.len();
    let mut q = 0.0;
    for i in 0..d {
        let mut row = 0.0;
        for j in 0..d {
            row += sigma[(i, j)] * x[j];
        }
        q += x[i] * row;
    }
    (m, m * m + q)
}

fn update_phi(log: &ExperimentLog, s: &mut MlrVariationalState) {
    let k = s.k();
    let inv = 1.0 / s.sigma_sq;
    let ln_pi: Vec<f64> = s.pi_hat.iter().map(|p| p.ln()).collect();
    s.phi.resize(log.len(), vec![0.0; k]);
    for (rec, row) in log.trials().iter().zip(s.phi.iter_mut()) {
        for j in 0..k {
            let (m, sq) = expected_sq(&rec.x, &s.mu[j], &s.sigma[j]);
            row[j] = ln_pi[j] + inv * (rec.y * m - 0.5 * sq);
        }
        normalize_log_weights(row);
    }
}

/// Evidence lower bound of the current state.
pub fn elbo(log: &ExperimentLog, s: &MlrVariationalState, prior: &WeightPrior) -> Result<f64> {
    let k = s.k();
    let d = prior.dim() as f64;
    let inv = 1.0 / s.sigma_sq;
    let mut total = 0.0;
    for (rec, row) in log.trials().iter().zip(&s.phi) {
        for j in 0..k {
            let f = row[j];
            if f <= 0.0 {
                continue;
            }
            let (m, sq) = expected_sq(&rec.x, &s.mu[j], &s.sigma[j]);
            let e_ll = -0.5 * (LN_2PI + s.sigma_sq.ln())
                - 0.5 * inv * (rec.y * rec.y - 2.0 * rec.y * m + sq);
            total += f * (s.pi_hat[j].ln() + e_ll - f.ln());
        }
    }
    for j in 0..k {
        let tr = s.sigma[j].trace();
        let r2: f64 = s.mu[j]
            .iter()
            .zip(&prior.w0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let kl = 0.5
            * ((tr + r2) / prior.sigma0_sq - d + d * prior.sigma0_sq.ln()
                - ln_det_spd(&s.sigma[j])?);
        total -= kl;
    }
    Ok(total)
}

/// Coordinate ascent until the relative ELBO change drops below `cfg.tol`
/// or `cfg.max_iters` iterations have run. A warm state fitted to a shorter
/// log is extended by computing responsibilities for the new trials first.
pub fn run<R: Rng + ?Sized>(
    log: &ExperimentLog,
    cfg: &MlrViConfig,
    init: Option<&MlrVariationalState>,
    rng: &mut R,
) -> Result<MlrVariationalState> {
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
    let mut s = match init {
        Some(w) if w.k() == cfg.k && w.phi.len() <= log.len() => {
            let mut s = w.clone();
            s.sigma_sq = cfg.sigma_sq;
            s.iterations = 0;
            s.converged = false;
            s.elbo_trace.clear();
            if cfg.max_iters > 0 {
                update_phi(log, &mut s);
            }
            s
        }
        Some(_) => return Err(Error::invalid("warm state does not match the log or K")),
        None => init_state(log, cfg, rng)?,
    };
    let mut prev: Option<f64> = None;
    for _ in 0..cfg.max_iters {
        update_w(log, &mut s, cfg)?;
        s.pi_hat = column_means(&s.phi, cfg.k);
        update_phi(log, &mut s);
        let e = elbo(log, &s, &cfg.prior)?;
        s.iterations += 1;
        s.elbo_trace.push(e);
        if let Some(p) = prev {
            if (e - p).abs() <= cfg.tol * p.abs().max(1.0) {
                s.converged = true;
                break;
            }
        }
        prev = Some(e);
    }
    Ok(s)
}

/// `m` draws: weights from each `q(w_k)`, mixing weights as the state
/// proportions of assignments drawn from the rows of `φ`.
pub fn sample<R: Rng + ?Sized>(
    s: &MlrVariationalState,
    m: usize,
    rng: &mut R,
) -> Result<ParamSampleSet> {
    let k = s.k();
    let chols: Vec<DMatrix<f64>> = s
        .sigma
        .iter()
        .map(|c| cholesky_with_jitter(c).map(|(l, _)| l))
        .collect::<Result<_>>()?;
    let t = s.phi.len();
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let weights: Vec<Vec<f64>> = (0..k)
            .map(|j| {
                let e = DVector::from_vec(standard_normal_vec(s.mu[j].len(), rng));
                let v = &chols[j] * e;
                s.mu[j].iter().zip(v.iter()).map(|(a, b)| a + b).collect()
            })
            .collect();
        let pi = if t == 0 {
            s.pi_hat.clone()
        } else {
            let mut counts = vec![0.0; k];
            for row in &s.phi {
                counts[categorical_unchecked(row, row.iter().sum(), rng)] += 1.0;
            }
            counts.iter().map(|c| c / t as f64).collect()
        };
        out.push(ParamBundle::Mlr(MlrParams {
            weights,
            pi,
            sigma_sq: s.sigma_sq,
        }));
    }
    ParamSampleSet::single_chain(out)
}
