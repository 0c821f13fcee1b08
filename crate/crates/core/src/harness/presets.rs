//! Named experiment configurations.

use std::path::PathBuf;

use crate::config::{ExperimentConfig, ModelFamily, Strategy};
use crate::data::CandidateSpec;
use crate::error::{Error, Result};
use crate::infomax::ParamBundle;
use crate::iohmm::glm::to_augmented;
use crate::iohmm::{IoHmmParams, MglmParams};
use crate::mlr::MlrParams;

/// Every preset name with a one-line description.
pub const PRESETS: [(&str, &str); 6] = [
    (
        "mlr2d",
        "2-state MLR, w = (-1,0),(1,0), inputs on a 10-degree circle grid",
    ),
    (
        "mlr10d",
        "2-state MLR in 10-D, w = e1, e2, 1000 random unit inputs",
    ),
    (
        "iohmm",
        "3-state Bernoulli IO-HMM, sticky transitions, 1001 stimuli on [-5, 5]",
    ),
    (
        "iohmm-chains",
        "the iohmm preset sampled with 5 chains of 100 draws",
    ),
    ("mglm", "2-state mixture of Bernoulli GLMs, pi = (0.6, 0.4)"),
    (
        "housing",
        "3-state MLR on a standardized 5000-row housing pool",
    ),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.0).collect()
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let c = match name {
        "mlr2d" => mlr2d(),
        "mlr10d" => mlr10d(),
        "iohmm" => iohmm(),
        "iohmm-chains" => {
            let mut c = iohmm();
            c.name = "iohmm-chains".into();
            c.chains = 5;
            c.burn_in = 40;
            c
        }
        "mglm" => mglm(),
        "housing" => housing(),
        other => {
            return Err(Error::config(format!(
                "unknown preset '{other}' (available: {})",
                preset_names().join(", ")
            )))
        }
    };
    Ok(c)
}

fn mlr2d() -> ExperimentConfig {
    let mut c = ExperimentConfig::new(ModelFamily::Mlr, 2, 2);
    c.name = "mlr2d".into();
    c.trials = 200;
    c.samples = 500;
    c.burn_in = 100;
    c.sigma_sq = 0.1;
    c.candidates = CandidateSpec::CircleGrid { step_deg: 10.0 };
    c.strategy = Strategy::InfomaxGibbs;
    c.strategies = vec![
        Strategy::InfomaxGibbs,
        Strategy::InfomaxVi,
        Strategy::Random,
    ];
    c.truth = Some(ParamBundle::Mlr(MlrParams {
        weights: vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
        pi: vec![0.6, 0.4],
        sigma_sq: 0.1,
    }));
    c
}

fn mlr10d() -> ExperimentConfig {
    let d = 10;
    let mut c = ExperimentConfig::new(ModelFamily::Mlr, 2, d);
    c.name = "mlr10d".into();
    c.trials = 200;
    c.samples = 500;
    c.burn_in = 100;
    c.sigma_sq = 0.1;
    c.candidates = CandidateSpec::Hypersphere {
        n: 1000,
        dim: d,
        seed: 1,
    };
    c.strategies = vec![
        Strategy::InfomaxGibbs,
        Strategy::InfomaxVi,
        Strategy::Random,
    ];
    let e = |i: usize| {
        (0..d)
            .map(|j| if j == i { 1.0 } else { 0.0 })
            .collect::<Vec<f64>>()
    };
    c.truth = Some(ParamBundle::Mlr(MlrParams {
        weights: vec![e(0), e(1)],
        pi: vec![0.6, 0.4],
        sigma_sq: 0.1,
    }));
    c
}

fn iohmm() -> ExperimentConfig {
    let mut c = ExperimentConfig::new(ModelFamily::IoHmm, 3, 2);
    c.name = "iohmm".into();
    c.trials = 500;
    c.samples = 500;
    c.burn_in = 200;
    c.candidates = CandidateSpec::LineGrid {
        lo: -5.0,
        hi: 5.0,
        step: 0.01,
    };
    c.bias = true;
    c.metric_cadence = 10;
    c.strategies = vec![
        Strategy::InfomaxGibbs,
        Strategy::InfomaxGlmMismatch,
        Strategy::Random,
    ];
    c.truth = Some(ParamBundle::IoHmm(IoHmmParams {
        weights: vec![
            to_augmented(5.0, 0.0),
            to_augmented(1.0, 3.0),
            to_augmented(1.0, -3.0),
        ],
        a: IoHmmParams::sticky_transitions(3, 0.95),
        pi0: vec![1.0 / 3.0; 3],
    }));
    c
}

fn mglm() -> ExperimentConfig {
    let mut c = ExperimentConfig::new(ModelFamily::Mglm, 2, 2);
    c.name = "mglm".into();
    c.trials = 1000;
    c.samples = 500;
    c.burn_in = 200;
    c.candidates = CandidateSpec::LineGrid {
        lo: -5.0,
        hi: 5.0,
        step: 0.01,
    };
    c.bias = true;
    c.metric_cadence = 10;
    c.strategies = vec![Strategy::InfomaxGibbs, Strategy::Random];
    c.truth = Some(ParamBundle::Mglm(MglmParams {
        weights: vec![vec![3.0, -6.0], vec![3.0, 6.0]],
        pi: vec![0.6, 0.4],
    }));
    c
}

/// Default location of the prepared housing pool.
pub fn default_housing_path() -> PathBuf {
    std::env::var_os("HOUSING_CSV")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data/california_housing.csv"))
}

fn housing() -> ExperimentConfig {
    let mut c = ExperimentConfig::new(ModelFamily::Mlr, 3, 9);
    c.name = "housing".into();
    c.trials = 500;
    c.samples = 500;
    c.burn_in = 100;
    c.sigma_sq = 0.5;
    c.candidates = CandidateSpec::PoolFile {
        path: default_housing_path(),
    };
    c.pool_candidates = 250;
    c.metric_cadence = 10;
    c.strategies = vec![Strategy::InfomaxGibbs, Strategy::Random];
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for name in preset_names() {
            let c = preset(name).unwrap();
            c.validate().unwrap();
            let back = ExperimentConfig::parse(&c.to_text()).unwrap();
            assert_eq!(back, c, "{name}");
        }
    }

    #[test]
    fn chains_preset_shape() {
        let c = preset("iohmm-chains").unwrap();
        assert_eq!((c.chains, c.samples / c.chains, c.burn_in), (5, 100, 40));
        assert!(preset("nope").is_err());
    }
}
