//! Gibbs sampler for the mixture of Bernoulli GLMs: weights by Laplace-MH,
//! `π ~ Dir(α₀ + n)`, then each `z_t` independently.

use rand::Rng;

use super::gibbs::{prior_weight, MhStats};
use super::glm::{bernoulli_ln_lik, glm_sample_posterior, BernoulliData, GlmPrior};
use super::MglmParams;
use crate::config::ExperimentConfig;
use crate::data::ExperimentLog;
use crate::error::{Error, Result};
use crate::infomax::{ParamBundle, ParamSampleSet};
use crate::linalg::dot;
use crate::mlr::gibbs::{best_start, state_counts};
use crate::randkit::{
    categorical_unchecked, ln_dirichlet_kernel, log_sum_exp, sample_dirichlet_alpha,
};

pub const DEFAULT_SWEEPS: usize = 700;
pub const DEFAULT_BURN_IN: usize = 200;

#[derive(Clone, Debug, PartialEq)]
pub struct MglmGibbsConfig {
    pub k: usize,
    pub samples: usize,
    pub burn_in: usize,
    pub prior: GlmPrior,
    pub alpha_pi: Vec<f64>,
    /// Fresh starting points tried before the main chain.
    pub restarts: usize,
    /// Sweeps run from each starting point before they are compared.
    pub pilot_sweeps: usize,
}

impl MglmGibbsConfig {
    pub fn from_experiment(c: &ExperimentConfig) -> Self {
        MglmGibbsConfig {
            k: c.k,
            samples: c.samples,
            burn_in: c.burn_in,
            prior: GlmPrior {
                w0: c.w0.clone(),
                sigma0_sq: c.sigma0_sq,
            },
            alpha_pi: c.alpha_pi.clone(),
            restarts: c.restarts,
            pilot_sweeps: c.pilot_sweeps,
        }
    }

    /// 700 sweeps with the first 200 discarded.
    pub fn with_defaults(k: usize, d: usize) -> Self {
        MglmGibbsConfig {
            k,
            samples: DEFAULT_SWEEPS - DEFAULT_BURN_IN,
            burn_in: DEFAULT_BURN_IN,
            prior: GlmPrior::isotropic(d, 10.0),
            alpha_pi: vec![1.0; k],
            restarts: 1,
            pilot_sweeps: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MglmGibbsState {
    pub z: Vec<usize>,
    pub params: MglmParams,
}

/// `p(z_t = k | y_t, x_t) ∝ p(y_t | x_t, w_k) π_k`, drawn independently.
pub fn z_step<R: Rng + ?Sized>(
    log: &ExperimentLog,
    params: &MglmParams,
    rng: &mut R,
) -> Vec<usize> {
    let k = params.k();
    let mut w = vec![0.0; k];
    log.trials()
        .iter()
        .map(|r| {
            let lw: Vec<f64> = (0..k)
                .map(|j| params.pi[j].ln() + bernoulli_ln_lik(r.y, dot(&r.x, &params.weights[j])))
                .collect();
            let m = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for j in 0..k {
                w[j] = (lw[j] - m).exp();
                total += w[j];
            }
            categorical_unchecked(&w, total, rng)
        })
        .collect()
}

pub fn init_state<R: Rng + ?Sized>(
    log: &ExperimentLog,
    cfg: &MglmGibbsConfig,
    rng: &mut R,
) -> Result<MglmGibbsState> {
    let z = (0..log.len()).map(|_| rng.random_range(0..cfg.k)).collect();
    let weights = (0..cfg.k).map(|_| prior_weight(&cfg.prior, rng)).collect();
    let pi = sample_dirichlet_alpha(&cfg.alpha_pi, rng)?;
    Ok(MglmGibbsState {
        z,
        params: MglmParams { weights, pi },
    })
}

pub fn sweep<R: Rng + ?Sized>(
    log: &ExperimentLog,
    state: &mut MglmGibbsState,
    cfg: &MglmGibbsConfig,
    rng: &mut R,
) -> Result<MhStats> {
    let mut stats = MhStats::default();
    for j in 0..cfg.k {
        let data = BernoulliData::subset(log, &state.z, j);
        let out = glm_sample_posterior(&data, &cfg.prior, &state.params.weights[j], rng)?;
        stats.proposals += 1;
        stats.accepted += out.accepted as usize;
        state.params.weights[j] = out.w;
    }
    let n = state_counts(&state.z, cfg.k);
    let post: Vec<f64> = cfg.alpha_pi.iter().zip(&n).map(|(a, c)| a + c).collect();
    state.params.pi = sample_dirichlet_alpha(&post, rng)?;
    state.z = z_step(log, &state.params, rng);
    Ok(stats)
}

/// Log posterior of the parameters with the assignments summed out, up to a
/// constant.
pub fn ln_joint(log: &ExperimentLog, params: &MglmParams, cfg: &MglmGibbsConfig) -> f64 {
    let ln_pi: Vec<f64> = params.pi.iter().map(|p| p.ln()).collect();
    let mut terms = vec![0.0; cfg.k];
    let mut v = 0.0;
    for r in log.trials() {
        for (j, t) in terms.iter_mut().enumerate() {
            *t = ln_pi[j] + bernoulli_ln_lik(r.y, dot(&r.x, &params.weights[j]));
        }
        v += log_sum_exp(&terms);
    }
    for w in &params.weights {
        v += cfg.prior.ln_density(w);
    }
    v + ln_dirichlet_kernel(&params.pi, &cfg.alpha_pi)
}

/// Run `burn_in + samples` sweeps from the best of `restarts` fresh starts
/// and the warm state, if any, after `pilot_sweeps` sweeps each.
pub fn run<R: Rng + ?Sized>(
    log: &ExperimentLog,
    cfg: &MglmGibbsConfig,
    init: Option<MglmGibbsState>,
    rng: &mut R,
) -> Result<(ParamSampleSet, MglmGibbsState, MhStats)> {
    if log.is_empty() {
        return Err(Error::invalid("Gibbs sampling needs at least one trial"));
    }
    if cfg.prior.dim() != log.dim() || cfg.alpha_pi.len() != cfg.k || cfg.samples < 1 {
        return Err(Error::config(
            "MGLM sampler configuration does not match the log",
        ));
    }
    let mut starts = Vec::new();
    match init {
        Some(mut s) if s.params.k() == cfg.k && s.params.dim() == log.dim() => {
            if s.z.len() != log.len() {
                s.z = z_step(log, &s.params, rng);
            }
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
        starts.push(init_state(log, cfg, rng)?);
    }
    let mut stats = MhStats::default();
    let mut state = best_start(
        starts,
        cfg.pilot_sweeps,
        |s| {
            stats.add(sweep(log, s, cfg, rng)?);
            Ok(())
        },
        |s| Ok(ln_joint(log, &s.params, cfg)),
    )?;
    let mut kept = Vec::with_capacity(cfg.samples);
    for it in 0..cfg.burn_in + cfg.samples {
        stats.add(sweep(log, &mut state, cfg, rng)?);
        if it >= cfg.burn_in {
            kept.push(ParamBundle::Mglm(state.params.clone()));
        }
    }
    Ok((ParamSampleSet::single_chain(kept)?, state, stats))
}
