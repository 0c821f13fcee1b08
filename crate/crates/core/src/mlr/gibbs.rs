//! Blocked Gibbs sampler for the mixture of linear regressions.
//!
//! Each sweep draws the assignments `z`, then `π ~ Dir(α + n)`, then every
//! `w_k` from its conjugate Gaussian posterior given the trials assigned to it.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{MlrParams, WeightPrior};
use crate::config::ExperimentConfig;
use crate::data::ExperimentLog;
use crate::error::{Error, Result};
use crate::infomax::{ParamBundle, ParamSampleSet};
use crate::linalg::{dot, PrecisionGaussian};
use crate::randkit::{
    categorical_unchecked, ln_dirichlet_kernel, ln_normal_pdf, log_sum_exp, sample_dirichlet_alpha,
    standard_normal_vec,
};

#[derive(Clone, Debug, PartialEq)]
pub struct MlrGibbsConfig {
    pub k: usize,
    pub samples: usize,
    pub burn_in: usize,
    pub prior: WeightPrior,
    pub sigma_sq: f64,
    pub alpha_pi: Vec<f64>,
    /// Fresh starting points tried before the main chain.
    pub restarts: usize,
    /// Sweeps run from each starting point before they are compared.
    pub pilot_sweeps: usize,
}

impl MlrGibbsConfig {
    pub fn from_experiment(c: &ExperimentConfig) -> Self {
        MlrGibbsConfig {
            k: c.k,
            samples: c.samples,
            burn_in: c.burn_in,
            prior: WeightPrior {
                w0: c.w0.clone(),
                sigma0_sq: c.sigma0_sq,
            },
            sigma_sq: c.sigma_sq,
            alpha_pi: c.alpha_pi.clone(),
            restarts: c.restarts,
            pilot_sweeps: c.pilot_sweeps,
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.k < 1 || self.samples < 1 {
            return Err(Error::config("K and M must be at least 1"));
        }
        if self.prior.dim() != d {
            return Err(Error::config(
                "prior mean length does not match the input dimension",
            ));
        }
        if !(self.prior.sigma0_sq > 0.0) || !(self.sigma_sq > 0.0) {
            return Err(Error::config("variances must be positive"));
        }
        if self.alpha_pi.len() != self.k || self.alpha_pi.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::config("alpha_pi must hold K positive entries"));
        }
        Ok(())
    }
}

/// Assignments (0-based) and parameters of one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct MlrGibbsState {
    pub z: Vec<usize>,
    pub params: MlrParams,
}

/// Draw every `z_t` from `p(z_t = k | y_t, x_t) ∝ π_k N(y_t; x_t·w_k, σ²)`.
pub fn z_step<R: Rng + ?Sized>(log: &ExperimentLog, params: &MlrParams, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::with_capacity(log.len());
    extend_z(log, params, &mut out, rng);
    out
}

fn extend_z<R: Rng + ?Sized>(
    log: &ExperimentLog,
    params: &MlrParams,
    z: &mut Vec<usize>,
    rng: &mut R,
) {
    let k = params.k();
    let ln_pi: Vec<f64> = params.pi.iter().map(|p| p.ln()).collect();
    let mut lw = vec![0.0; k];
    let mut w = vec![0.0; k];
    for rec in &log.trials()[z.len()..] {
        let mut m = f64::NEG_INFINITY;
        for j in 0..k {
            lw[j] =
                ln_pi[j] + ln_normal_pdf(rec.y, dot(&rec.x, &params.weights[j]), params.sigma_sq);
            m = m.max(lw[j]);
        }
        let mut total = 0.0;
        for j in 0..k {
            w[j] = (lw[j] - m).exp();
            total += w[j];
        }
        z.push(categorical_unchecked(&w, total, rng));
    }
}

pub fn state_counts(z: &[usize], k: usize) -> Vec<f64> {
    let mut n = vec![0.0; k];
    for &s in z {
        n[s] += 1.0;
    }
    n
}

/// `π ~ Dir(α + n)` with `n` the state counts of `z`.
pub fn pi_step<R: Rng + ?Sized>(z: &[usize], alpha: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let n = state_counts(z, alpha.len());
    let post: Vec<f64> = alpha.iter().zip(&n).map(|(a, c)| a + c).collect();
    sample_dirichlet_alpha(&post, rng)
}

/// Conjugate posterior of `w_k` given the trials assigned to state `k`:
/// precision `σ₀⁻²I + σ⁻²XᵀX`, mean `P⁻¹(σ₀⁻²w0 + σ⁻²XᵀY)`.
pub fn w_posterior(
    log: &ExperimentLog,
    z: &[usize],
    k: usize,
    prior: &WeightPrior,
    sigma_sq: f64,
) -> Result<PrecisionGaussian> {
    let posts = all_w_posteriors(log, z, k + 1, prior, sigma_sq, Some(k))?;
    Ok(posts.into_iter().nth(k).flatten().expect("requested state"))
}

fn all_w_posteriors(
    log: &ExperimentLog,
    z: &[usize],
    k: usize,
    prior: &WeightPrior,
    sigma_sq: f64,
    only: Option<usize>,
) -> Result<Vec<Option<PrecisionGaussian>>> {
    let d = prior.dim();
    let mut xtx = vec![vec![0.0; d * d]; k];
    let mut xty = vec![vec![0.0; d]; k];
    for (rec, &s) in log.trials().iter().zip(z) {
        if s >= k || only.is_some_and(|o| o != s) {
            continue;
        }
        let a = &mut xtx[s];
        for i in 0..d {
            let xi = rec.x[i];
            for j in 0..=i {
                a[i * d + j] += xi * rec.x[j];
            }
        }
        for i in 0..d {
            xty[s][i] += rec.x[i] * rec.y;
        }
    }
    let inv0 = 1.0 / prior.sigma0_sq;
    let inv = 1.0 / sigma_sq;
    let mut out = Vec::with_capacity(k);
    for s in 0..k {
        if only.is_some_and(|o| o != s) {
            out.push(None);
            continue;
        }
        let mut p = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            for j in 0..=i {
                let v = inv * xtx[s][i * d + j];
                p[(i, j)] = v;
                p[(j, i)] = v;
            }
            p[(i, i)] += inv0;
        }
        let b = DVector::from_fn(d, |i, _| inv0 * prior.w0[i] + inv * xty[s][i]);
        out.push(Some(PrecisionGaussian::from_precision(&p, &b)?));
    }
    Ok(out)
}

/// Draw `w_k` from its conjugate posterior.
pub fn w_step<R: Rng + ?Sized>(
    log: &ExperimentLog,
    z: &[usize],
    k: usize,
    prior: &WeightPrior,
    sigma_sq: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let post = w_posterior(log, z, k, prior, sigma_sq)?;
    let e = DVector::from_vec(standard_normal_vec(post.dim(), rng));
    Ok(post.transform(&e).iter().copied().collect())
}

/// Fresh chain state: uniform random `z`, uniform `π`, prior draws for `w`.
pub fn init_state<R: Rng + ?Sized>(
    log: &ExperimentLog,
    cfg: &MlrGibbsConfig,
    rng: &mut R,
) -> MlrGibbsState {
    let z = (0..log.len()).map(|_| rng.random_range(0..cfg.k)).collect();
    let sd = cfg.prior.sigma0_sq.sqrt();
    let weights = (0..cfg.k)
        .map(|_| {
            standard_normal_vec(cfg.prior.dim(), rng)
                .iter()
                .zip(&cfg.prior.w0)
                .map(|(e, m)| m + sd * e)
                .collect()
        })
        .collect();
    MlrGibbsState {
        z,
        params: MlrParams {
            weights,
            pi: vec![1.0 / cfg.k as f64; cfg.k],
            sigma_sq: cfg.sigma_sq,
        },
    }
}

/// Draw `π` and every `w_k` given the current assignments.
fn params_step<R: Rng + ?Sized>(
    log: &ExperimentLog,
    state: &mut MlrGibbsState,
    cfg: &MlrGibbsConfig,
    rng: &mut R,
) -> Result<()> {
    state.params.pi = pi_step(&state.z, &cfg.alpha_pi, rng)?;
    let posts = all_w_posteriors(log, &state.z, cfg.k, &cfg.prior, cfg.sigma_sq, None)?;
    for (k, post) in posts.into_iter().enumerate() {
        let post = post.expect("every state requested");
        let e = DVector::from_vec(standard_normal_vec(post.dim(), rng));
        state.params.weights[k] = post.transform(&e).iter().copied().collect();
    }
    Ok(())
}

/// One full z → π → w sweep.
pub fn sweep<R: Rng + ?Sized>(
    log: &ExperimentLog,
    state: &mut MlrGibbsState,
    cfg: &MlrGibbsConfig,
    rng: &mut R,
) -> Result<()> {
    state.z.clear();
    extend_z(log, &state.params, &mut state.z, rng);
    params_step(log, state, cfg, rng)
}

/// Log posterior of the parameters with the assignments summed out, up to a
/// constant.
pub fn ln_joint(log: &ExperimentLog, params: &MlrParams, cfg: &MlrGibbsConfig) -> f64 {
    let ln_pi: Vec<f64> = params.pi.iter().map(|p| p.ln()).collect();
    let mut terms = vec![0.0; cfg.k];
    let mut v = 0.0;
    for rec in log.trials() {
        for (k, t) in terms.iter_mut().enumerate() {
            *t = ln_pi[k] + ln_normal_pdf(rec.y, dot(&rec.x, &params.weights[k]), params.sigma_sq);
        }
        v += log_sum_exp(&terms);
    }
    for w in &params.weights {
        let r2: f64 = w
            .iter()
            .zip(&cfg.prior.w0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        v -= 0.5 * r2 / cfg.prior.sigma0_sq;
    }
    v + ln_dirichlet_kernel(&params.pi, &cfg.alpha_pi)
}

/// Advance every candidate start by `pilot` steps and return the one that
/// scores highest. A single candidate is returned untouched.
pub(crate) fn best_start<S>(
    mut starts: Vec<S>,
    pilot: usize,
    mut step: impl FnMut(&mut S) -> Result<()>,
    score: impl Fn(&S) -> Result<f64>,
) -> Result<S> {
    if starts.len() == 1 {
        return Ok(starts.pop().expect("one start"));
    }
    let mut best: Option<(f64, S)> = None;
    for mut s in starts {
        for _ in 0..pilot {
            step(&mut s)?;
        }
        let v = score(&s)?;
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, s));
        }
    }
    best.map(|(_, s)| s)
        .ok_or_else(|| Error::invalid("no starting state"))
}

/// Run `burn_in + samples` sweeps and keep the last `samples` parameter
/// draws. The chain continues from the best of `restarts` fresh starts and
/// the warm state, if any, after `pilot_sweeps` sweeps each. A warm state
/// from a shorter log is extended by drawing the new assignments from its
/// parameters.
pub fn run<R: Rng + ?Sized>(
    log: &ExperimentLog,
    cfg: &MlrGibbsConfig,
    init: Option<MlrGibbsState>,
    rng: &mut R,
) -> Result<(ParamSampleSet, MlrGibbsState)> {
    if log.is_empty() {
        return Err(Error::invalid("Gibbs sampling needs at least one trial"));
    }
    cfg.validate(log.dim())?;
    let mut starts = Vec::new();
    match init {
        Some(mut s) if s.params.k() == cfg.k && s.z.len() <= log.len() => {
            s.params.sigma_sq = cfg.sigma_sq;
            extend_z(log, &s.params.clone(), &mut s.z, rng);
            starts.push(s);
        }
        Some(_) => return Err(Error::invalid("warm state does not match the log or K")),
        None => {}
    }
    let fresh = if starts.is_empty() {
        cfg.restarts.max(1)
    } else {
        cfg.restarts
    };
    for _ in 0..fresh {
        // Sweeps start with z, which would discard the uniform initial
        // assignments; draw the parameters from them first instead.
        let mut s = init_state(log, cfg, rng);
        params_step(log, &mut s, cfg, rng)?;
        starts.push(s);
    }
    let mut state = best_start(
        starts,
        cfg.pilot_sweeps,
        |s| sweep(log, s, cfg, rng),
        |s| Ok(ln_joint(log, &s.params, cfg)),
    )?;
    let mut kept = Vec::with_capacity(cfg.samples);
    for it in 0..cfg.burn_in + cfg.samples {
        sweep(log, &mut state, cfg, rng)?;
        if it >= cfg.burn_in {
            kept.push(ParamBundle::Mlr(state.params.clone()));
        }
    }
    Ok((ParamSampleSet::single_chain(kept)?, state))
}
