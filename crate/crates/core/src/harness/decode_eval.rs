//! Latent-state decoding on held-out trials with models trained by
//! different selection strategies.

use std::fs::{self, File};
use std::path::Path;

use rand::Rng;

use super::run::{build_candidates, run_closed_loop, LoopOptions};
use super::simulator::Simulator;
use crate::config::{ExperimentConfig, ModelFamily, Strategy};
use crate::data::{ExperimentLog, LogMeta};
use crate::error::{Error, Result};
use crate::infomax::ParamBundle;
use crate::iohmm::decode::{accuracy, decode_states, hard_decode, write_decoded_csv};
use crate::iohmm::IoHmmParams;
use crate::par::Execution;
use crate::rng::{labels, RngStream};

/// Decoding result of one parameter set on the evaluation trials.
#[derive(Clone, Debug)]
pub struct DecodeRow {
    /// `truth` for the generative parameters, otherwise the training strategy.
    pub model: String,
    pub accuracy: f64,
    pub posteriors: Vec<Vec<f64>>,
    pub decoded: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct DecodeReport {
    pub train_trials: usize,
    pub eval_log: ExperimentLog,
    pub true_states: Vec<usize>,
    pub rows: Vec<DecodeRow>,
}

impl DecodeReport {
    pub fn row(&self, model: &str) -> Option<&DecodeRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    /// `accuracy.csv`, `eval-log.csv` and `decoded-<model>.csv`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("accuracy.csv"))?;
        w.write_record(["model", "train_trials", "eval_trials", "accuracy"])?;
        for r in &self.rows {
            w.write_record([
                r.model.clone(),
                self.train_trials.to_string(),
                self.true_states.len().to_string(),
                r.accuracy.to_string(),
            ])?;
        }
        w.flush()?;
        self.eval_log.save_csv(&dir.join("eval-log.csv"))?;
        for r in &self.rows {
            let f = File::create(dir.join(format!("decoded-{}.csv", r.model)))?;
            write_decoded_csv(f, &r.posteriors, Some(&self.true_states))?;
        }
        Ok(())
    }
}

fn decode_row(
    model: String,
    log: &ExperimentLog,
    p: &IoHmmParams,
    truth: &[usize],
) -> Result<DecodeRow> {
    let posteriors = decode_states(log, p)?;
    let decoded = hard_decode(&posteriors);
    Ok(DecodeRow {
        model,
        accuracy: accuracy(&decoded, truth),
        posteriors,
        decoded,
    })
}

/// Train an infomax-Gibbs and a random model on `train_t` trials each,
/// simulate `eval_t` fresh trials with uniformly drawn inputs, and decode
/// them with each model's posterior mean (relabelled to the truth) and with
/// the generative parameters.
pub fn run_state_decoding_eval(
    cfg: &ExperimentConfig,
    train_t: usize,
    eval_t: usize,
    exec: Execution,
) -> Result<DecodeReport> {
    if cfg.family != ModelFamily::IoHmm {
        return Err(Error::config("state decoding needs the iohmm family"));
    }
    let truth = match &cfg.truth {
        Some(ParamBundle::IoHmm(p)) => p.clone(),
        _ => {
            return Err(Error::config(
                "state decoding needs generative IO-HMM parameters",
            ))
        }
    };
    let mut train = cfg.clone();
    train.trials = train_t;
    train.strategies = vec![Strategy::InfomaxGibbs, Strategy::Random];
    // only the final estimate is used
    train.metric_cadence = train_t.max(1);

    // evaluation trials live on their own stream family
    let eval_root = RngStream::new(cfg.seed, 1);
    let candidates = build_candidates(cfg)?;
    let mut sim = Simulator::new(ParamBundle::IoHmm(truth.clone()), &eval_root)?;
    let mut pick = eval_root.fork(labels::SELECTION);
    let mut eval_log = ExperimentLog::new(
        cfg.d,
        LogMeta {
            family: cfg.family,
            seed: cfg.seed,
            strategy: Strategy::Random,
        },
    );
    for _ in 0..eval_t {
        let x = candidates
            .input(pick.random_range(0..candidates.len()))
            .to_vec();
        let y = sim.respond(&x)?;
        eval_log.push(x, y)?;
    }
    let true_states = sim.states().to_vec();

    let mut rows = vec![decode_row("truth".into(), &eval_log, &truth, &true_states)?];
    if train_t > 0 {
        let result = run_closed_loop(
            &train,
            &LoopOptions {
                exec,
                progress: None,
            },
        )?;
        for run in &result.runs {
            let est = match &run.final_estimate {
                Some(ParamBundle::IoHmm(p)) => p.clone(),
                _ => return Err(Error::invalid("training run produced no IO-HMM estimate")),
            };
            rows.push(decode_row(
                run.strategy.to_string(),
                &eval_log,
                &est,
                &true_states,
            )?);
        }
    }
    Ok(DecodeReport {
        train_trials: train_t,
        eval_log,
        true_states,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::CandidateSpec;
    use crate::iohmm::glm::to_augmented;

    fn cfg(k: usize) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(ModelFamily::IoHmm, k, 2);
        c.candidates = CandidateSpec::LineGrid {
            lo: -5.0,
            hi: 5.0,
            step: 0.5,
        };
        c.bias = true;
        c.samples = 40;
        c.burn_in = 10;
        c.alpha_pi = vec![1.0; k];
        c.alpha = vec![vec![1.0; k]; k];
        let w = [to_augmented(5.0, 0.0), to_augmented(1.0, 3.0)];
        c.truth = Some(ParamBundle::IoHmm(
            IoHmmParams::new(
                w[..k].to_vec(),
                IoHmmParams::sticky_transitions(k, 0.9),
                vec![1.0 / k as f64; k],
            )
            .unwrap(),
        ));
        c
    }

    #[test]
    fn single_state_decodes_perfectly() {
        let r = run_state_decoding_eval(&cfg(1), 15, 30, Execution::Auto).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert!(r.rows.iter().all(|row| row.accuracy == 1.0));
    }

    #[test]
    fn oracle_row_and_shapes() {
        let r = run_state_decoding_eval(&cfg(2), 0, 50, Execution::Auto).unwrap();
        assert_eq!(r.rows.len(), 1);
        let o = r.row("truth").unwrap();
        assert_eq!((o.posteriors.len(), r.true_states.len()), (50, 50));
        assert!(o.accuracy > 0.5);
    }

    #[test]
    fn needs_iohmm() {
        let mut c = cfg(2);
        c.family = ModelFamily::Mlr;
        assert!(matches!(
            run_state_decoding_eval(&c, 1, 1, Execution::Auto),
            Err(Error::Config(_))
        ));
    }
}
