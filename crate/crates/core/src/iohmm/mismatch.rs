//! Posterior of a single Bernoulli GLM fitted to all trials, ignoring any
//! latent state. The data never change within a run, so one Laplace fit
//! serves as the proposal for the whole independence-sampler chain.

use rand::Rng;

use super::gibbs::MhStats;
use super::glm::{laplace_fit, mh_step, BernoulliData, GlmPrior, LaplaceProposal};
use crate::data::ExperimentLog;
use crate::error::Result;
use crate::infomax::{ParamBundle, ParamSampleSet};

#[derive(Clone, Debug)]
pub struct GlmChain {
    pub w: Vec<f64>,
    pub proposal: LaplaceProposal,
}

/// `burn_in + m` Metropolis-Hastings steps with the Laplace proposal,
/// keeping the last `m`. Starts at `init` or, if absent, at the mode.
pub fn glm_mismatch_posterior<R: Rng + ?Sized>(
    log: &ExperimentLog,
    prior: &GlmPrior,
    m: usize,
    burn_in: usize,
    init: Option<&[f64]>,
    rng: &mut R,
) -> Result<(ParamSampleSet, GlmChain, MhStats)> {
    let data = BernoulliData::from_log(log);
    let start = init.map(|w| w.to_vec()).unwrap_or_else(|| prior.w0.clone());
    let proposal = laplace_fit(&data, prior, &start)?;
    let mut w = match init {
        Some(w) => w.to_vec(),
        None => proposal.map().iter().copied().collect(),
    };
    let mut stats = MhStats::default();
    let mut kept = Vec::with_capacity(m);
    for it in 0..burn_in + m {
        let out = mh_step(&data, prior, &proposal, &w, rng);
        stats.proposals += 1;
        stats.accepted += out.accepted as usize;
        w = out.w;
        if it >= burn_in {
            kept.push(ParamBundle::Glm(w.clone()));
        }
    }
    Ok((
        ParamSampleSet::single_chain(kept)?,
        GlmChain { w, proposal },
        stats,
    ))
}
