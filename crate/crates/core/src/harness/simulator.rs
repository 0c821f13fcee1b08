//! Simulated system that answers queries from known generative parameters.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::infomax::ParamBundle;
use crate::iohmm::glm::sigmoid;
use crate::linalg::dot;
use crate::randkit::categorical_unchecked;
use crate::rng::{labels, RngStream};

/// Latent draws and output noise come from separate streams, so the latent
/// trajectory of an IO-HMM does not depend on which inputs are chosen.
#[derive(Clone, Debug)]
pub struct Simulator {
    truth: ParamBundle,
    z: Option<usize>,
    latent: RngStream,
    emission: RngStream,
    states: Vec<usize>,
}

impl Simulator {
    pub fn new(truth: ParamBundle, root: &RngStream) -> Result<Self> {
        truth.validate()?;
        if matches!(truth, ParamBundle::Glm(_)) {
            return Err(Error::invalid(
                "a single GLM has no latent state to simulate",
            ));
        }
        Ok(Simulator {
            truth,
            z: None,
            latent: root.fork(labels::SIMULATOR_LATENT),
            emission: root.fork(labels::SIMULATOR_EMISSION),
            states: Vec::new(),
        })
    }

    pub fn truth(&self) -> &ParamBundle {
        &self.truth
    }

    /// Latent state of every trial answered so far.
    pub fn states(&self) -> &[usize] {
        &self.states
    }

    /// Answer one query. MLR and MGLM draw a fresh state each trial; the
    /// IO-HMM emits from its current state and then moves along `A`.
    pub fn respond(&mut self, x: &[f64]) -> Result<f64> {
        if x.len() != self.truth.dim() {
            return Err(Error::invalid(
                "query dimension does not match the simulator",
            ));
        }
        let (y, z) = match &self.truth {
            ParamBundle::Mlr(p) => {
                let z = categorical_unchecked(&p.pi, 1.0, &mut self.latent);
                let e: f64 = self.emission.sample(StandardNormal);
                (dot(x, &p.weights[z]) + p.sigma_sq.sqrt() * e, z)
            }
            ParamBundle::Mglm(p) => {
                let z = categorical_unchecked(&p.pi, 1.0, &mut self.latent);
                (bernoulli(dot(x, &p.weights[z]), &mut self.emission), z)
            }
            ParamBundle::IoHmm(p) => {
                let z = match self.z {
                    Some(z) => z,
                    None => categorical_unchecked(&p.pi0, 1.0, &mut self.latent),
                };
                let y = bernoulli(dot(x, &p.weights[z]), &mut self.emission);
                self.z = Some(categorical_unchecked(&p.a[z], 1.0, &mut self.latent));
                (y, z)
            }
            ParamBundle::Glm(_) => unreachable!(),
        };
        self.states.push(z);
        Ok(y)
    }
}

fn bernoulli(eta: f64, rng: &mut RngStream) -> f64 {
    let u: f64 = rng.random();
    if u < sigmoid(eta) {
        1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iohmm::{IoHmmParams, MglmParams};
    use crate::mlr::MlrParams;

    #[test]
    fn identity_transitions_freeze_the_state() {
        let p = IoHmmParams::new(
            vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]],
            IoHmmParams::sticky_transitions(3, 1.0),
            vec![1.0 / 3.0; 3],
        )
        .unwrap();
        let mut s = Simulator::new(ParamBundle::IoHmm(p), &RngStream::new(4, 0)).unwrap();
        for i in 0..1000 {
            s.respond(&[i as f64 * 0.01, 1.0]).unwrap();
        }
        let z0 = s.states()[0];
        assert!(s.states().iter().all(|z| *z == z0));
    }

    #[test]
    fn single_component_residual_moments() {
        let p =
            MlrParams::new(vec![vec![2.0, -1.0], vec![9.0, 9.0]], vec![1.0, 0.0], 0.25).unwrap();
        let mut s = Simulator::new(ParamBundle::Mlr(p), &RngStream::new(5, 0)).unwrap();
        let n = 20_000;
        let x = [0.6, 0.8];
        let r: Vec<f64> = (0..n)
            .map(|_| s.respond(&x).unwrap() - (1.2 - 0.8))
            .collect();
        let m = r.iter().sum::<f64>() / n as f64;
        let v = r.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        let skew = r.iter().map(|e| ((e - m) / v.sqrt()).powi(3)).sum::<f64>() / n as f64;
        let kurt = r.iter().map(|e| ((e - m) / v.sqrt()).powi(4)).sum::<f64>() / n as f64;
        assert!(s.states().iter().all(|z| *z == 0));
        assert!(m.abs() < 4.0 * (0.25 / n as f64).sqrt());
        // var of the sample variance ≈ 2σ⁴/n
        assert!((v - 0.25).abs() < 4.0 * (2.0 * 0.0625 / n as f64).sqrt());
        assert!(skew.abs() < 4.0 * (6.0 / n as f64).sqrt());
        assert!((kurt - 3.0).abs() < 4.0 * (24.0 / n as f64).sqrt());
    }

    #[test]
    fn fair_coin() {
        let p = MglmParams::new(vec![vec![0.0, 0.0]], vec![1.0]).unwrap();
        let mut s = Simulator::new(ParamBundle::Mglm(p), &RngStream::new(6, 0)).unwrap();
        let n = 10_000;
        let ones: f64 = (0..n).map(|_| s.respond(&[1.0, 1.0]).unwrap()).sum();
        assert!((ones / n as f64 - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn latent_path_ignores_inputs() {
        let p = IoHmmParams::new(
            vec![vec![5.0, 0.0], vec![1.0, 3.0]],
            IoHmmParams::sticky_transitions(2, 0.8),
            vec![0.5, 0.5],
        )
        .unwrap();
        let root = RngStream::new(8, 0);
        let mut a = Simulator::new(ParamBundle::IoHmm(p.clone()), &root).unwrap();
        let mut b = Simulator::new(ParamBundle::IoHmm(p), &root).unwrap();
        for i in 0..300 {
            a.respond(&[-5.0 + 0.01 * i as f64, 1.0]).unwrap();
            b.respond(&[4.0, 1.0]).unwrap();
        }
        assert_eq!(a.states(), b.states());
    }
}
