//! Bayesian active learning for discrete latent variable regression models.
//!
//! The crate selects experimental inputs by maximizing the mutual information
//! between the next response and the model parameters, estimated from
//! posterior parameter samples. Three model families are supported:
//!
//! * mixtures of linear regressions ([`mlr`]), with a conjugate Gibbs sampler
//!   and mean-field variational inference;
//! * Bernoulli input-output hidden Markov models ([`iohmm`]), with a
//!   Laplace/Metropolis-within-Gibbs sampler, mean-field VI and forward-backward
//!   state decoding;
//! * mixtures of Bernoulli GLMs, the memoryless special case of the IO-HMM.
//!
//! [`infomax`] turns a [`infomax::ParamSampleSet`] into per-candidate mutual
//! information and picks the next input. [`harness`] runs closed-loop and
//! pool-based experiments against simulated or recorded systems, and
//! [`fisher`] provides the Fisher-information analysis of the MLR model.
//!
//! All randomness flows through explicitly passed [`rng::RngStream`] values, so
//! every run is reproducible from its seed.

pub mod config;
pub mod data;
pub mod error;
pub mod fisher;
pub mod harness;
pub mod infomax;
pub mod iohmm;
pub mod linalg;
pub mod mlr;
pub mod par;
pub mod randkit;
pub mod rng;

pub use config::{ExperimentConfig, ModelFamily, Strategy};
pub use data::{CandidateSet, CandidateSpec, ExperimentLog, TrialRecord};
pub use error::{Error, Result};
pub use infomax::{ParamBundle, ParamSampleSet};
pub use rng::RngStream;
