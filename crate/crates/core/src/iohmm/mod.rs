//! Bernoulli input-output hidden Markov models and their memoryless special
//! case, the mixture of Bernoulli GLMs.
//!
//! Weights act on the full input vector: `p(y = 1 | x, w) = σ(w·x)`. For a
//! scalar stimulus with slope `w` and bias `b`, the input is `(x, 1)` and the
//! weight vector is `(w, −b)`, giving `σ(w x − b)`; see [`glm::to_augmented`]
//! and [`glm::from_augmented`].

pub mod decode;
pub mod gibbs;
pub mod glm;
pub mod hmm;
pub mod mglm;
pub mod mismatch;
pub mod vi;

pub use glm::{bernoulli_glm_prob, GlmPrior};
pub use hmm::HmmMessages;

use crate::error::{Error, Result};
use crate::mlr::check_simplex;

#[derive(Clone, Debug, PartialEq)]
pub struct IoHmmParams {
    pub weights: Vec<Vec<f64>>,
    /// Row-stochastic transitions, `a[i][l] = p(z_t = l | z_{t−1} = i)`.
    pub a: Vec<Vec<f64>>,
    pub pi0: Vec<f64>,
}

impl IoHmmParams {
    pub fn new(weights: Vec<Vec<f64>>, a: Vec<Vec<f64>>, pi0: Vec<f64>) -> Result<Self> {
        let p = IoHmmParams { weights, a, pi0 };
        p.validate()?;
        Ok(p)
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.first().map(|w| w.len()).unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 || self.a.len() != k || self.pi0.len() != k {
            return Err(Error::invalid("weights, A and pi0 must agree on K"));
        }
        let d = self.dim();
        if d == 0 || self.weights.iter().any(|w| w.len() != d) {
            return Err(Error::invalid(
                "weight vectors must share a positive length",
            ));
        }
        for (i, row) in self.a.iter().enumerate() {
            if row.len() != k {
                return Err(Error::invalid("A must be K×K"));
            }
            check_simplex(row, &format!("row {i} of A"))?;
        }
        check_simplex(&self.pi0, "pi0")
    }

    /// Transition matrix with the given self-transition probability and the
    /// remaining mass spread evenly.
    pub fn sticky_transitions(k: usize, stay: f64) -> Vec<Vec<f64>> {
        if k == 1 {
            return vec![vec![1.0]];
        }
        let off = (1.0 - stay) / (k - 1) as f64;
        (0..k)
            .map(|i| (0..k).map(|j| if i == j { stay } else { off }).collect())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MglmParams {
    pub weights: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
}

impl MglmParams {
    pub fn new(weights: Vec<Vec<f64>>, pi: Vec<f64>) -> Result<Self> {
        let p = MglmParams { weights, pi };
        p.validate()?;
        Ok(p)
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.first().map(|w| w.len()).unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() || self.weights.len() != self.pi.len() {
            return Err(Error::invalid("need one weight vector per mixing weight"));
        }
        let d = self.dim();
        if d == 0 || self.weights.iter().any(|w| w.len() != d) {
            return Err(Error::invalid(
                "weight vectors must share a positive length",
            ));
        }
        check_simplex(&self.pi, "pi")
    }

    /// The equivalent IO-HMM whose every transition row equals `π`.
    pub fn as_iohmm(&self) -> IoHmmParams {
        IoHmmParams {
            weights: self.weights.clone(),
            a: vec![self.pi.clone(); self.k()],
            pi0: self.pi.clone(),
        }
    }
}
