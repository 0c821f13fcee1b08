//! Posterior sample sets, sample-based mutual information, input selection
//! and the evaluation metrics.

pub mod metrics;
pub mod mi;

pub use metrics::{aligned_rmse, bic, posterior_entropy, selection_histogram, RmseBlocks};
pub use mi::{mutual_information, select_input, PredictiveModel, Selection};

use crate::config::ModelFamily;
use crate::error::{Error, Result};
use crate::iohmm::{IoHmmParams, MglmParams};
use crate::mlr::MlrParams;

/// One posterior draw of a model's parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum ParamBundle {
    Mlr(MlrParams),
    IoHmm(IoHmmParams),
    Mglm(MglmParams),
    /// A single Bernoulli GLM weight vector (no latent state).
    Glm(Vec<f64>),
}

impl ParamBundle {
    pub fn family(&self) -> Option<ModelFamily> {
        match self {
            ParamBundle::Mlr(_) => Some(ModelFamily::Mlr),
            ParamBundle::IoHmm(_) => Some(ModelFamily::IoHmm),
            ParamBundle::Mglm(_) => Some(ModelFamily::Mglm),
            ParamBundle::Glm(_) => None,
        }
    }

    fn tag(&self) -> u8 {
        match self {
            ParamBundle::Mlr(_) => 0,
            ParamBundle::IoHmm(_) => 1,
            ParamBundle::Mglm(_) => 2,
            ParamBundle::Glm(_) => 3,
        }
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        match self {
            ParamBundle::Mlr(p) => &p.weights,
            ParamBundle::IoHmm(p) => &p.weights,
            ParamBundle::Mglm(p) => &p.weights,
            ParamBundle::Glm(w) => std::slice::from_ref(w),
        }
    }

    pub fn k(&self) -> usize {
        self.weights().len()
    }

    pub fn dim(&self) -> usize {
        self.weights().first().map(|w| w.len()).unwrap_or(0)
    }

    /// Mixing weights (MLR, MGLM) or initial-state distribution (IO-HMM).
    pub fn mixing(&self) -> Option<&[f64]> {
        match self {
            ParamBundle::Mlr(p) => Some(&p.pi),
            ParamBundle::IoHmm(p) => Some(&p.pi0),
            ParamBundle::Mglm(p) => Some(&p.pi),
            ParamBundle::Glm(_) => None,
        }
    }

    pub fn transitions(&self) -> Option<&[Vec<f64>]> {
        match self {
            ParamBundle::IoHmm(p) => Some(&p.a),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ParamBundle::Mlr(p) => p.validate(),
            ParamBundle::IoHmm(p) => p.validate(),
            ParamBundle::Mglm(p) => p.validate(),
            ParamBundle::Glm(w) if w.is_empty() => Err(Error::invalid("empty GLM weight vector")),
            ParamBundle::Glm(_) => Ok(()),
        }
    }

    pub fn check_shape(&self, k: usize, d: usize) -> Result<()> {
        self.validate()?;
        if self.k() != k || self.dim() != d {
            return Err(Error::invalid(format!(
                "expected K={k}, D={d}; got K={}, D={}",
                self.k(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Flat vector in canonical order: all weights, then the first `K − 1`
    /// entries of every simplex (each transition row, then the mixing or
    /// initial-state weights). The last entry of a simplex is determined by
    /// the others and is left out.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.weights().iter().flatten().copied().collect();
        let k = self.k();
        if let Some(a) = self.transitions() {
            for row in a {
                v.extend_from_slice(&row[..k - 1]);
            }
        }
        if let Some(p) = self.mixing() {
            v.extend_from_slice(&p[..k - 1]);
        }
        v
    }

    /// Relabel states: state `i` of the result is state `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> ParamBundle {
        let pw = |w: &[Vec<f64>]| perm.iter().map(|&i| w[i].clone()).collect::<Vec<_>>();
        let pv = |p: &[f64]| perm.iter().map(|&i| p[i]).collect::<Vec<_>>();
        match self {
            ParamBundle::Mlr(p) => ParamBundle::Mlr(MlrParams {
                weights: pw(&p.weights),
                pi: pv(&p.pi),
                sigma_sq: p.sigma_sq,
            }),
            ParamBundle::Mglm(p) => ParamBundle::Mglm(MglmParams {
                weights: pw(&p.weights),
                pi: pv(&p.pi),
            }),
            ParamBundle::IoHmm(p) => ParamBundle::IoHmm(IoHmmParams {
                weights: pw(&p.weights),
                a: perm
                    .iter()
                    .map(|&i| perm.iter().map(|&j| p.a[i][j]).collect())
                    .collect(),
                pi0: pv(&p.pi0),
            }),
            ParamBundle::Glm(w) => ParamBundle::Glm(w.clone()),
        }
    }
}

/// Posterior draws of one model, with the chain each draw came from.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSampleSet {
    samples: Vec<ParamBundle>,
    chains: Vec<usize>,
}

impl ParamSampleSet {
    pub fn new(samples: Vec<ParamBundle>, chains: Vec<usize>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("a sample set needs at least one sample"));
        }
        if chains.len() != samples.len() {
            return Err(Error::invalid("one chain tag per sample is required"));
        }
        let first = &samples[0];
        for s in &samples[1..] {
            if s.tag() != first.tag() || s.k() != first.k() || s.dim() != first.dim() {
                return Err(Error::invalid("samples differ in family, K or D"));
            }
        }
        Ok(ParamSampleSet { samples, chains })
    }

    pub fn single_chain(samples: Vec<ParamBundle>) -> Result<Self> {
        let n = samples.len();
        Self::new(samples, vec![0; n])
    }

    /// Concatenate sets in order, tagging each set's samples with its
    /// position.
    pub fn concat(sets: Vec<ParamSampleSet>) -> Result<Self> {
        let mut samples = Vec::new();
        let mut chains = Vec::new();
        for (c, s) in sets.into_iter().enumerate() {
            chains.extend(std::iter::repeat_n(c, s.samples.len()));
            samples.extend(s.samples);
        }
        Self::new(samples, chains)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ParamBundle> {
        self.samples.iter()
    }

    pub fn samples(&self) -> &[ParamBundle] {
        &self.samples
    }

    pub fn get(&self, i: usize) -> &ParamBundle {
        &self.samples[i]
    }

    pub fn chain_of(&self, i: usize) -> usize {
        self.chains[i]
    }

    pub fn chains(&self) -> &[usize] {
        &self.chains
    }

    pub fn k(&self) -> usize {
        self.samples[0].k()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].dim()
    }

    pub fn first(&self) -> &ParamBundle {
        &self.samples[0]
    }

    /// Relabel the states of every sample by the same permutation.
    pub fn permuted(&self, perm: &[usize]) -> ParamSampleSet {
        ParamSampleSet {
            samples: self.samples.iter().map(|s| s.permuted(perm)).collect(),
            chains: self.chains.clone(),
        }
    }

    /// Element-wise sample mean. Simplex blocks stay on the simplex.
    pub fn mean_bundle(&self) -> ParamBundle {
        let m = self.samples.len() as f64;
        let k = self.k();
        let d = self.dim();
        let mut w = vec![vec![0.0; d]; k];
        for s in &self.samples {
            for (acc, v) in w.iter_mut().zip(s.weights()) {
                for (a, b) in acc.iter_mut().zip(v) {
                    *a += b / m;
                }
            }
        }
        let mean_vec = |get: &dyn Fn(&ParamBundle) -> &[f64]| {
            let mut acc = vec![0.0; k];
            for s in &self.samples {
                for (a, b) in acc.iter_mut().zip(get(s)) {
                    *a += b / m;
                }
            }
            acc
        };
        match &self.samples[0] {
            ParamBundle::Mlr(p) => ParamBundle::Mlr(MlrParams {
                weights: w,
                pi: mean_vec(&|s| s.mixing().unwrap()),
                sigma_sq: p.sigma_sq,
            }),
            ParamBundle::Mglm(_) => ParamBundle::Mglm(MglmParams {
                weights: w,
                pi: mean_vec(&|s| s.mixing().unwrap()),
            }),
            ParamBundle::IoHmm(_) => {
                let a = (0..k)
                    .map(|i| mean_vec(&|s: &ParamBundle| &s.transitions().unwrap()[i]))
                    .collect();
                ParamBundle::IoHmm(IoHmmParams {
                    weights: w,
                    a,
                    pi0: mean_vec(&|s| s.mixing().unwrap()),
                })
            }
            ParamBundle::Glm(_) => ParamBundle::Glm(w.into_iter().next().unwrap()),
        }
    }
}
