//! Gibbs sampler for the Bernoulli IO-HMM.
//!
//! A sweep updates each state's GLM weights by a Laplace-proposal
//! Metropolis-Hastings step on the trials currently assigned to it, draws
//! each transition row from `Dir(α_k + n_k)`, resamples the whole state path
//! by forward-filtering backward-sampling, and finally draws
//! `π₀ ~ Dir(α₀ + e_{z_1})`.

use rand::Rng;

use super::glm::{glm_sample_posterior, BernoulliData, GlmPrior};
use super::hmm::{emission_loglik, forward_backward, sample_state_sequence};
use super::IoHmmParams;
use crate::config::ExperimentConfig;
use crate::data::ExperimentLog;
use crate::error::{Error, Result};
use crate::infomax::{ParamBundle, ParamSampleSet};
use crate::mlr::gibbs::best_start;
use crate::randkit::{ln_dirichlet_kernel, sample_dirichlet_alpha, standard_normal_vec};

#[derive(Clone, Debug, PartialEq)]
pub struct IoHmmGibbsConfig {
    pub k: usize,
    pub samples: usize,
    pub burn_in: usize,
    pub prior: GlmPrior,
    /// K×K Dirichlet prior on the rows of A.
    pub alpha: Vec<Vec<f64>>,
    pub alpha_pi0: Vec<f64>,
    /// Fresh starting points tried before the main chain.
    pub restarts: usize,
    /// Sweeps run from each starting point before they are compared.
    pub pilot_sweeps: usize,
}

impl IoHmmGibbsConfig {
    pub fn from_experiment(c: &ExperimentConfig) -> Self {
        IoHmmGibbsConfig {
            k: c.k,
            samples: c.samples,
            burn_in: c.burn_in,
            prior: GlmPrior {
                w0: c.w0.clone(),
                sigma0_sq: c.sigma0_sq,
            },
            alpha: c.alpha.clone(),
            alpha_pi0: c.alpha_pi.clone(),
            restarts: c.restarts,
            pilot_sweeps: c.pilot_sweeps,
        }
    }

    pub fn with_defaults(k: usize, d: usize, samples: usize, burn_in: usize) -> Self {
        IoHmmGibbsConfig {
            k,
            samples,
            burn_in,
            prior: GlmPrior::isotropic(d, 10.0),
            alpha: vec![vec![1.0; k]; k],
            alpha_pi0: vec![1.0; k],
            restarts: 1,
            pilot_sweeps: 0,
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
        if self.alpha.len() != self.k || self.alpha.iter().any(|r| r.len() != self.k) {
            return Err(Error::config("alpha must be K×K"));
        }
        if self.alpha_pi0.len() != self.k {
            return Err(Error::config("alpha_pi0 must have K entries"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IoHmmGibbsState {
    pub z: Vec<usize>,
    pub params: IoHmmParams,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MhStats {
    pub proposals: usize,
    pub accepted: usize,
}

impl MhStats {
    pub fn rate(&self) -> f64 {
        if self.proposals == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }

    pub fn add(&mut self, other: MhStats) {
        self.proposals += other.proposals;
        self.accepted += other.accepted;
    }
}

pub(crate) fn prior_weight<R: Rng + ?Sized>(prior: &GlmPrior, rng: &mut R) -> Vec<f64> {
    let sd = prior.sigma0_sq.sqrt();
    standard_normal_vec(prior.dim(), rng)
        .iter()
        .zip(&prior.w0)
        .map(|(e, m)| m + sd * e)
        .collect()
}

/// Transition counts `n_{kl} = Σ_t 1(z_t = k, z_{t+1} = l)`.
pub fn transition_counts(z: &[usize], k: usize) -> Vec<Vec<f64>> {
    let mut n = vec![vec![0.0; k]; k];
    for w in z.windows(2) {
        n[w[0]][w[1]] += 1.0;
    }
    n
}

/// Fresh state: uniform random path, transition rows, `π₀` and weights from
/// their priors.
pub fn init_state<R: Rng + ?Sized>(
    log: &ExperimentLog,
    cfg: &IoHmmGibbsConfig,
    rng: &mut R,
) -> Result<IoHmmGibbsState> {
    let z = (0..log.len()).map(|_| rng.random_range(0..cfg.k)).collect();
    let weights = (0..cfg.k).map(|_| prior_weight(&cfg.prior, rng)).collect();
    let a = cfg
        .alpha
        .iter()
        .map(|row| sample_dirichlet_alpha(row, rng))
        .collect::<Result<Vec<_>>>()?;
    let pi0 = sample_dirichlet_alpha(&cfg.alpha_pi0, rng)?;
    Ok(IoHmmGibbsState {
        z,
        params: IoHmmParams { weights, a, pi0 },
    })
}

/// Redraw the path by forward-filtering backward-sampling under the
/// current parameters.
pub fn resample_path<R: Rng + ?Sized>(
    log: &ExperimentLog,
    params: &IoHmmParams,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let ln_lik = emission_loglik(log, &params.weights);
    let msgs = forward_backward(&ln_lik, &params.pi0, &params.a)?;
    Ok(sample_state_sequence(&params.pi0, &params.a, &msgs, rng))
}

pub fn sweep<R: Rng + ?Sized>(
    log: &ExperimentLog,
    state: &mut IoHmmGibbsState,
    cfg: &IoHmmGibbsConfig,
    rng: &mut R,
) -> Result<MhStats> {
    let k = cfg.k;
    let mut stats = MhStats::default();
    let counts = transition_counts(&state.z, k);
    for j in 0..k {
        let data = BernoulliData::subset(log, &state.z, j);
        let out = glm_sample_posterior(&data, &cfg.prior, &state.params.weights[j], rng)?;
        stats.proposals += 1;
        stats.accepted += out.accepted as usize;
        state.params.weights[j] = out.w;
        let post: Vec<f64> = cfg.alpha[j]
            .iter()
            .zip(&counts[j])
            .map(|(a, n)| a + n)
            .collect();
        state.params.a[j] = sample_dirichlet_alpha(&post, rng)?;
    }
    state.z = resample_path(log, &state.params, rng)?;
    let mut post0 = cfg.alpha_pi0.clone();
    if let Some(&z1) = state.z.first() {
        post0[z1] += 1.0;
    }
    state.params.pi0 = sample_dirichlet_alpha(&post0, rng)?;
    Ok(stats)
}

/// Log posterior of the parameters with the state path summed out, up to a
/// constant.
pub fn ln_joint(log: &ExperimentLog, params: &IoHmmParams, cfg: &IoHmmGibbsConfig) -> Result<f64> {
    let ln_lik = emission_loglik(log, &params.weights);
    let mut v = forward_backward(&ln_lik, &params.pi0, &params.a)?.log_marginal();
    for (w, (row, alpha)) in params.weights.iter().zip(params.a.iter().zip(&cfg.alpha)) {
        v += cfg.prior.ln_density(w) + ln_dirichlet_kernel(row, alpha);
    }
    Ok(v + ln_dirichlet_kernel(&params.pi0, &cfg.alpha_pi0))
}

/// Run `burn_in + samples` sweeps, retaining `(w, A, π₀)` after burn-in.
/// The chain continues from the best of `restarts` fresh starts and the warm
/// state, if any, after `pilot_sweeps` sweeps each. A warm state is first
/// brought up to date by resampling its path on the current log.
pub fn run<R: Rng + ?Sized>(
    log: &ExperimentLog,
    cfg: &IoHmmGibbsConfig,
    init: Option<IoHmmGibbsState>,
    rng: &mut R,
) -> Result<(ParamSampleSet, IoHmmGibbsState, MhStats)> {
    if log.is_empty() {
        return Err(Error::invalid("Gibbs sampling needs at least one trial"));
    }
    cfg.validate(log.dim())?;
    let mut starts = Vec::new();
    match init {
        Some(mut s) if s.params.k() == cfg.k && s.params.dim() == log.dim() => {
            if s.z.len() != log.len() {
                s.z = resample_path(log, &s.params, rng)?;
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
        |s| ln_joint(log, &s.params, cfg),
    )?;
    let mut kept = Vec::with_capacity(cfg.samples);
    for it in 0..cfg.burn_in + cfg.samples {
        stats.add(sweep(log, &mut state, cfg, rng)?);
        if it >= cfg.burn_in {
            kept.push(ParamBundle::IoHmm(state.params.clone()));
        }
    }
    Ok((ParamSampleSet::single_chain(kept)?, state, stats))
}
