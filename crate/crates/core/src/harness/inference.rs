//! Posterior engines used inside the experiment loop. Each engine keeps its
//! last sampler state, which seeds the next refit when `warm_start` is set.

use rand::Rng;

use crate::config::{ExperimentConfig, ModelFamily, Strategy};
use crate::data::ExperimentLog;
use crate::error::{Error, Result};
use crate::infomax::{aligned_rmse, ParamBundle, ParamSampleSet};
use crate::iohmm::gibbs::{self as io_gibbs, prior_weight, IoHmmGibbsConfig, IoHmmGibbsState};
use crate::iohmm::glm::GlmPrior;
use crate::iohmm::mglm::{self, MglmGibbsConfig, MglmGibbsState};
use crate::iohmm::mismatch::glm_mismatch_posterior;
use crate::iohmm::vi::{self as io_vi, IoHmmVariationalState, IoHmmViConfig};
use crate::iohmm::{IoHmmParams, MglmParams};
use crate::mlr::gibbs::{self as mlr_gibbs, MlrGibbsConfig, MlrGibbsState};
use crate::mlr::vi::{self as mlr_vi, MlrVariationalState, MlrViConfig};
use crate::mlr::MlrParams;
use crate::par::{self, Execution};
use crate::randkit::sample_dirichlet_alpha;
use crate::rng::{labels, RngStream};

/// `m` draws from the prior of the configured family.
pub fn prior_samples<R: Rng + ?Sized>(
    cfg: &ExperimentConfig,
    mismatch: bool,
    m: usize,
    rng: &mut R,
) -> Result<ParamSampleSet> {
    let prior = GlmPrior {
        w0: cfg.w0.clone(),
        sigma0_sq: cfg.sigma0_sq,
    };
    let k = cfg.k;
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let weights: Vec<Vec<f64>> = (0..k).map(|_| prior_weight(&prior, rng)).collect();
        out.push(if mismatch {
            ParamBundle::Glm(weights.into_iter().next().unwrap())
        } else {
            match cfg.family {
                ModelFamily::Mlr => ParamBundle::Mlr(MlrParams {
                    weights,
                    pi: sample_dirichlet_alpha(&cfg.alpha_pi, rng)?,
                    sigma_sq: cfg.sigma_sq,
                }),
                ModelFamily::Mglm => ParamBundle::Mglm(MglmParams {
                    weights,
                    pi: sample_dirichlet_alpha(&cfg.alpha_pi, rng)?,
                }),
                ModelFamily::IoHmm => ParamBundle::IoHmm(IoHmmParams {
                    weights,
                    a: cfg
                        .alpha
                        .iter()
                        .map(|r| sample_dirichlet_alpha(r, rng))
                        .collect::<Result<_>>()?,
                    pi0: sample_dirichlet_alpha(&cfg.alpha_pi, rng)?,
                }),
            }
        });
    }
    ParamSampleSet::single_chain(out)
}

/// Warm state of one Gibbs chain for any family.
#[derive(Clone, Debug, PartialEq)]
pub enum GibbsState {
    Mlr(MlrGibbsState),
    IoHmm(IoHmmGibbsState),
    Mglm(MglmGibbsState),
}

/// One Gibbs chain of `samples` retained draws after `cfg.burn_in` sweeps.
pub fn gibbs_chain<R: Rng + ?Sized>(
    log: &ExperimentLog,
    cfg: &ExperimentConfig,
    samples: usize,
    init: Option<GibbsState>,
    rng: &mut R,
) -> Result<(ParamSampleSet, GibbsState)> {
    match cfg.family {
        ModelFamily::Mlr => {
            let mut c = MlrGibbsConfig::from_experiment(cfg);
            c.samples = samples;
            let init = match init {
                Some(GibbsState::Mlr(s)) => Some(s),
                None => None,
                Some(_) => return Err(Error::invalid("warm state of the wrong family")),
            };
            let (set, s) = mlr_gibbs::run(log, &c, init, rng)?;
            Ok((set, GibbsState::Mlr(s)))
        }
        ModelFamily::IoHmm => {
            let mut c = IoHmmGibbsConfig::from_experiment(cfg);
            c.samples = samples;
            let init = match init {
                Some(GibbsState::IoHmm(s)) => Some(s),
                None => None,
                Some(_) => return Err(Error::invalid("warm state of the wrong family")),
            };
            let (set, s, _) = io_gibbs::run(log, &c, init, rng)?;
            Ok((set, GibbsState::IoHmm(s)))
        }
        ModelFamily::Mglm => {
            let mut c = MglmGibbsConfig::from_experiment(cfg);
            c.samples = samples;
            let init = match init {
                Some(GibbsState::Mglm(s)) => Some(s),
                None => None,
                Some(_) => return Err(Error::invalid("warm state of the wrong family")),
            };
            let (set, s, _) = mglm::run(log, &c, init, rng)?;
            Ok((set, GibbsState::Mglm(s)))
        }
    }
}

/// Relabel every sample of `set` by the permutation that best matches its
/// mean to `reference`.
pub fn align_to(set: &ParamSampleSet, reference: &ParamBundle) -> Result<ParamSampleSet> {
    let perm = aligned_rmse(&set.mean_bundle(), reference)?.perm;
    if perm.iter().enumerate().all(|(i, p)| i == *p) {
        return Ok(set.clone());
    }
    Ok(set.permuted(&perm))
}

/// `chains` independent Gibbs chains, each keeping `cfg.samples / chains`
/// draws after its own burn-in. Chain `c` draws from
/// `base.fork_indexed(CHAIN, c)`, so the result does not depend on how the
/// chains are scheduled. Before merging, each chain's labels are aligned to
/// chain 0.
pub fn run_parallel_chains(
    log: &ExperimentLog,
    cfg: &ExperimentConfig,
    chains: usize,
    base: &RngStream,
    init: Option<Vec<GibbsState>>,
    exec: Execution,
) -> Result<(ParamSampleSet, Vec<GibbsState>)> {
    if chains == 0 {
        return Err(Error::config("at least one chain is required"));
    }
    if cfg.samples % chains != 0 {
        return Err(Error::config(format!(
            "M = {} is not divisible by the chain count {chains}",
            cfg.samples
        )));
    }
    let per = cfg.samples / chains;
    let mut init: Vec<Option<GibbsState>> = match init {
        Some(v) if v.len() == chains => v.into_iter().map(Some).collect(),
        _ => vec![None; chains],
    };
    let starts: Vec<(usize, Option<GibbsState>)> =
        init.iter_mut().map(|s| s.take()).enumerate().collect();
    let results = par::map_slice(&starts, exec, |(c, s)| {
        let mut rng = base.fork_indexed(labels::CHAIN, *c as u64);
        gibbs_chain(log, cfg, per, s.clone(), &mut rng)
    });
    let mut sets = Vec::with_capacity(chains);
    let mut states = Vec::with_capacity(chains);
    for r in results {
        let (set, st) = r?;
        sets.push(set);
        states.push(st);
    }
    if chains == 1 {
        return Ok((sets.pop().unwrap(), states));
    }
    let reference = sets[0].mean_bundle();
    let aligned: Vec<ParamSampleSet> = sets
        .iter()
        .enumerate()
        .map(|(c, s)| {
            if c == 0 {
                Ok(s.clone())
            } else {
                align_to(s, &reference)
            }
        })
        .collect::<Result<_>>()?;
    Ok((ParamSampleSet::concat(aligned)?, states))
}

#[derive(Clone, Debug)]
enum Warm {
    None,
    Gibbs(Vec<GibbsState>),
    MlrVi(MlrVariationalState),
    IoHmmVi(IoHmmVariationalState),
    Glm(Vec<f64>),
}

/// Posterior sampler for one strategy, carrying warm state across refits.
#[derive(Clone, Debug)]
pub struct Engine {
    kind: EngineKind,
    warm: Warm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EngineKind {
    Gibbs,
    Vi,
    GlmMismatch,
}

impl Engine {
    pub fn for_strategy(cfg: &ExperimentConfig, s: Strategy) -> Result<Option<Engine>> {
        let kind = match s {
            Strategy::Random => return Ok(None),
            Strategy::InfomaxGibbs => EngineKind::Gibbs,
            Strategy::InfomaxVi => {
                if cfg.family == ModelFamily::Mglm {
                    return Err(Error::config(
                        "infomax-vi is not available for the mglm family",
                    ));
                }
                EngineKind::Vi
            }
            Strategy::InfomaxGlmMismatch => {
                if !cfg.family.binary_output() {
                    return Err(Error::config(
                        "infomax-glm-mismatch needs a binary-output family",
                    ));
                }
                EngineKind::GlmMismatch
            }
        };
        Ok(Some(Engine::new(kind)))
    }

    pub fn new(kind: EngineKind) -> Engine {
        Engine {
            kind,
            warm: Warm::None,
        }
    }

    pub fn kind(&self) -> EngineKind {
        self.kind
    }

    /// Whether draws come from the true-family Gibbs sampler.
    pub fn is_true_family_gibbs(&self) -> bool {
        self.kind == EngineKind::Gibbs
    }

    /// Posterior samples given `log`. With an empty log these are prior
    /// draws. `base` seeds this refit only.
    pub fn fit(
        &mut self,
        log: &ExperimentLog,
        cfg: &ExperimentConfig,
        base: &RngStream,
        exec: Execution,
    ) -> Result<ParamSampleSet> {
        let mut rng = base.clone();
        if log.is_empty() {
            return prior_samples(
                cfg,
                self.kind == EngineKind::GlmMismatch,
                cfg.samples,
                &mut rng,
            );
        }
        match self.kind {
            EngineKind::Gibbs => {
                let init = match std::mem::replace(&mut self.warm, Warm::None) {
                    Warm::Gibbs(v) if cfg.warm_start => Some(v),
                    _ => None,
                };
                let (set, states) =
                    run_parallel_chains(log, cfg, cfg.chains.max(1), base, init, exec)?;
                self.warm = Warm::Gibbs(states);
                Ok(set)
            }
            EngineKind::Vi => match cfg.family {
                ModelFamily::Mlr => {
                    let c = MlrViConfig::from_experiment(cfg);
                    let init = match &self.warm {
                        Warm::MlrVi(s) if cfg.warm_start => Some(s),
                        _ => None,
                    };
                    let s = mlr_vi::run(log, &c, init, &mut rng)?;
                    let set = mlr_vi::sample(&s, cfg.samples, &mut rng)?;
                    self.warm = Warm::MlrVi(s);
                    Ok(set)
                }
                ModelFamily::IoHmm => {
                    let c = IoHmmViConfig::from_experiment(cfg);
                    let init = match &self.warm {
                        Warm::IoHmmVi(s) if cfg.warm_start => Some(s),
                        _ => None,
                    };
                    let s = io_vi::run(log, &c, init, &mut rng)?;
                    let set = io_vi::sample(&s, cfg.samples, &mut rng)?;
                    self.warm = Warm::IoHmmVi(s);
                    Ok(set)
                }
                ModelFamily::Mglm => Err(Error::config("infomax-vi is not available for mglm")),
            },
            EngineKind::GlmMismatch => {
                let prior = GlmPrior {
                    w0: cfg.w0.clone(),
                    sigma0_sq: cfg.sigma0_sq,
                };
                let init = match &self.warm {
                    Warm::Glm(w) if cfg.warm_start => Some(w.as_slice()),
                    _ => None,
                };
                let (set, chain, _) =
                    glm_mismatch_posterior(log, &prior, cfg.samples, cfg.burn_in, init, &mut rng)?;
                self.warm = Warm::Glm(chain.w);
                Ok(set)
            }
        }
    }
}
