//! Closed-loop and pool-based experiment loops, replication and output.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, RngCore};

use super::inference::Engine;
use super::simulator::Simulator;
use crate::config::{ExperimentConfig, Strategy};
use crate::data::{CandidateSet, ExperimentLog, LogMeta};
use crate::error::{Error, Result};
use crate::infomax::metrics::{selection_histogram, Histogram, MetricRow};
use crate::infomax::mi::select_among;
use crate::infomax::{
    aligned_rmse, posterior_entropy, ParamBundle, ParamSampleSet, PredictiveModel,
};
use crate::par::{self, Execution};
use crate::rng::{labels, RngStream};

/// Candidate set described by the configuration, with the bias column
/// appended when requested.
pub fn build_candidates(cfg: &ExperimentConfig) -> Result<CandidateSet> {
    let c = CandidateSet::build(&cfg.candidates)?;
    let c = if cfg.bias { c.with_bias_column() } else { c };
    if c.dim() != cfg.d {
        return Err(Error::config(format!(
            "candidates have dimension {}, config has D={}",
            c.dim(),
            cfg.d
        )));
    }
    Ok(c)
}

/// Seed of replication `r`, derived from the base seed.
pub fn replication_seed(base: u64, r: usize) -> u64 {
    RngStream::new(base, labels::REPLICATION)
        .fork_indexed(labels::REPLICATION, r as u64)
        .next_u64()
}

/// One strategy's trajectory within a run.
#[derive(Clone, Debug)]
pub struct StrategyRun {
    pub strategy: Strategy,
    pub log: ExperimentLog,
    pub metrics: Vec<MetricRow>,
    /// Candidate index queried at each trial.
    pub chosen: Vec<usize>,
    /// False for warm-up trials of infomax strategies.
    pub by_strategy: Vec<bool>,
    /// True latent state at each trial (simulated runs only).
    pub true_states: Vec<usize>,
    /// Posterior-mean estimate after the last trial, relabelled to match
    /// the truth or reference.
    pub final_estimate: Option<ParamBundle>,
    /// Posterior draws behind the last metric row.
    pub final_samples: Option<ParamSampleSet>,
}

impl StrategyRun {
    /// Indices chosen by the strategy itself (warm-up excluded).
    pub fn strategy_selections(&self) -> Vec<usize> {
        self.chosen
            .iter()
            .zip(&self.by_strategy)
            .filter(|(_, s)| **s)
            .map(|(i, _)| *i)
            .collect()
    }

    pub fn final_metrics(&self) -> Option<&MetricRow> {
        self.metrics.last()
    }
}

/// Where responses come from.
pub enum Responder {
    Simulated(Simulator),
    /// Stored outputs of a pool candidate set.
    Pool,
}

/// Options shared by the loop drivers.
pub struct LoopOptions<'a> {
    pub exec: Execution,
    pub progress: Option<&'a (dyn Fn(&MetricRow) + Sync)>,
}

impl Default for LoopOptions<'_> {
    fn default() -> Self {
        LoopOptions {
            exec: Execution::Auto,
            progress: None,
        }
    }
}

/// Run `cfg.trials` trials of one strategy. `reference` is the bundle the
/// metrics compare against (the generative truth, or a reference fit).
pub fn run_strategy(
    cfg: &ExperimentConfig,
    strategy: Strategy,
    mut candidates: CandidateSet,
    mut responder: Responder,
    reference: &ParamBundle,
    root: &RngStream,
    opts: &LoopOptions<'_>,
) -> Result<StrategyRun> {
    let exec = opts.exec;
    let mut engine = Engine::for_strategy(cfg, strategy)?;
    let mut metric_engine = Engine::new(super::inference::EngineKind::Gibbs);
    let mut sel_rng = root.fork(labels::SELECTION);
    let inference = root.fork(labels::INFERENCE);
    let metrics_root = root.fork(labels::METRICS);
    let mut log = ExperimentLog::new(
        cfg.d,
        LogMeta {
            family: cfg.family,
            seed: cfg.seed,
            strategy,
        },
    );
    let mut run = StrategyRun {
        strategy,
        log: ExperimentLog::new(cfg.d, log.meta().clone()),
        metrics: Vec::new(),
        chosen: Vec::new(),
        by_strategy: Vec::new(),
        true_states: Vec::new(),
        final_estimate: None,
        final_samples: None,
    };
    let mut posterior: Option<ParamSampleSet> = None;
    let mut fitted_at = usize::MAX;
    for t in 1..=cfg.trials {
        let clock = Instant::now();
        let infomax_now = strategy.is_infomax() && t > cfg.warmup;
        let mut available = candidates.available();
        if available.is_empty() {
            return Err(Error::PoolExhausted);
        }
        if cfg.pool_candidates > 0 && available.len() > cfg.pool_candidates {
            // partial Fisher-Yates: a uniform subset, kept in index order
            for i in 0..cfg.pool_candidates {
                let j = sel_rng.random_range(i..available.len());
                available.swap(i, j);
            }
            available.truncate(cfg.pool_candidates);
            available.sort_unstable();
        }
        let idx = if infomax_now {
            let engine = engine.as_mut().expect("infomax strategies have an engine");
            if posterior.is_none() {
                posterior = Some(engine.fit(
                    &log,
                    cfg,
                    &inference.fork_indexed(labels::INFERENCE, t as u64),
                    exec,
                )?);
                fitted_at = t - 1;
            }
            let model =
                PredictiveModel::with_execution(posterior.as_ref().unwrap(), Some(&log), exec)?;
            select_among(&model, &candidates, &available, exec)?.index
        } else {
            available[sel_rng.random_range(0..available.len())]
        };
        let x = candidates.input(idx).to_vec();
        let y = match &mut responder {
            Responder::Simulated(sim) => sim.respond(&x)?,
            Responder::Pool => candidates.consume(idx)?,
        };
        log.push(x.clone(), y)?;
        run.chosen.push(idx);
        run.by_strategy.push(infomax_now || !strategy.is_infomax());

        if let Some(engine) = engine.as_mut() {
            let due = t >= cfg.warmup && (t - cfg.warmup) % cfg.refit_every == 0;
            if t < cfg.trials && (due || posterior.is_none()) && t + 1 > cfg.warmup {
                posterior = Some(engine.fit(
                    &log,
                    cfg,
                    &inference.fork_indexed(labels::INFERENCE, t as u64),
                    exec,
                )?);
                fitted_at = t;
            }
        }
        let wall_ms = clock.elapsed().as_secs_f64() * 1e3;

        if t % cfg.metric_cadence == 0 || t == cfg.trials {
            let samples = if let Some(e) = engine.as_mut().filter(|e| e.is_true_family_gibbs()) {
                // the selection chain is itself a true-family Gibbs chain
                if fitted_at != t {
                    posterior = Some(e.fit(
                        &log,
                        cfg,
                        &inference.fork_indexed(labels::INFERENCE, t as u64),
                        exec,
                    )?);
                    fitted_at = t;
                }
                posterior.clone().unwrap()
            } else {
                metric_engine.fit(
                    &log,
                    cfg,
                    &metrics_root.fork_indexed(labels::METRICS, t as u64),
                    exec,
                )?
            };
            let mean = samples.mean_bundle();
            let rmse = aligned_rmse(&mean, reference)?;
            let row = MetricRow {
                t,
                strategy: strategy.to_string(),
                entropy: posterior_entropy(&samples)?,
                rmse_w: rmse.weights,
                rmse_a: rmse.transitions,
                rmse_pi: rmse.pi,
                selected_idx: Some(idx),
                selected_x: x,
                wall_ms,
            };
            if let Some(p) = opts.progress {
                p(&row);
            }
            run.metrics.push(row);
            if t == cfg.trials {
                run.final_estimate = Some(mean.permuted(&rmse.perm));
                run.final_samples = Some(samples);
            }
        }
    }
    if let Responder::Simulated(sim) = responder {
        run.true_states = sim.states().to_vec();
    }
    run.log = log;
    Ok(run)
}

/// All strategies of one replication.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub config_hash: u64,
    pub seed: u64,
    pub candidates: CandidateSet,
    pub runs: Vec<StrategyRun>,
}

impl RunResult {
    pub fn run(&self, s: Strategy) -> Option<&StrategyRun> {
        self.runs.iter().find(|r| r.strategy == s)
    }

    pub fn histogram(&self, s: Strategy) -> Result<Option<Histogram>> {
        match self.run(s) {
            Some(r) => Ok(Some(selection_histogram(
                &r.strategy_selections(),
                &self.candidates,
            )?)),
            None => Ok(None),
        }
    }

    /// `config.txt`, `log.csv` (first strategy), `log-<strategy>.csv`,
    /// `metrics.csv`, `histogram.csv` and `curves.csv`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        let curves = aggregate(std::slice::from_ref(self));
        write_run_files(self, dir)?;
        write_curves(&curves, &dir.join("curves.csv"))
    }
}

fn write_run_files(r: &RunResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut text = r.config.to_text();
    text.push_str(&format!("# config_hash = {:016x}\n", r.config_hash));
    fs::write(dir.join("config.txt"), text)?;
    if let Some(first) = r.runs.first() {
        first.log.save_csv(&dir.join("log.csv"))?;
    }
    for s in &r.runs {
        s.log
            .save_csv(&dir.join(format!("log-{}.csv", s.strategy)))?;
    }
    let mut w = csv::Writer::from_path(dir.join("metrics.csv"))?;
    w.write_record(MetricRow::csv_header(r.config.d))?;
    for s in &r.runs {
        for m in &s.metrics {
            w.write_record(m.csv_record())?;
        }
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join("histogram.csv"))?;
    w.write_record(["strategy", "candidate_idx", "coordinate", "count"])?;
    for s in &r.runs {
        let h = selection_histogram(&s.strategy_selections(), &r.candidates)?;
        for (i, (n, c)) in h.counts.iter().zip(&h.coordinate).enumerate() {
            let c = if c.is_nan() {
                String::new()
            } else {
                c.to_string()
            };
            w.write_record([s.strategy.to_string(), i.to_string(), c, n.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Closed-loop run of every strategy in `cfg.strategies` against the
/// simulator. All strategies share the simulator streams.
pub fn run_closed_loop(cfg: &ExperimentConfig, opts: &LoopOptions<'_>) -> Result<RunResult> {
    cfg.validate()?;
    let truth = cfg
        .truth
        .clone()
        .ok_or_else(|| Error::config("closed-loop runs need generative parameters (truth.*)"))?;
    let candidates = build_candidates(cfg)?;
    if candidates.is_pool() {
        return Err(Error::config(
            "closed-loop runs need a grid candidate set; use the pool driver",
        ));
    }
    let root = RngStream::new(cfg.seed, 0);
    let mut runs = Vec::with_capacity(cfg.strategies.len());
    for &s in &cfg.strategies {
        let sim = Simulator::new(truth.clone(), &root)?;
        runs.push(run_strategy(
            cfg,
            s,
            candidates.clone(),
            Responder::Simulated(sim),
            &truth,
            &root,
            opts,
        )?);
    }
    Ok(RunResult {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        candidates,
        runs,
    })
}

/// Pool-based run: queried rows reveal their stored output and are
/// consumed. Metrics compare against `reference`.
pub fn run_pool(
    cfg: &ExperimentConfig,
    pool: &CandidateSet,
    reference: &ParamBundle,
    opts: &LoopOptions<'_>,
) -> Result<RunResult> {
    cfg.validate()?;
    if !pool.is_pool() {
        return Err(Error::config("pool runs need a pool candidate set"));
    }
    if pool.dim() != cfg.d {
        return Err(Error::config("pool dimension does not match D"));
    }
    let root = RngStream::new(cfg.seed, 0);
    let mut runs = Vec::with_capacity(cfg.strategies.len());
    for &s in &cfg.strategies {
        runs.push(run_strategy(
            cfg,
            s,
            pool.clone(),
            Responder::Pool,
            reference,
            &root,
            opts,
        )?);
    }
    Ok(RunResult {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        candidates: pool.clone(),
        runs,
    })
}

/// Mean and 95% normal-approximation half-width of one metric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
}

impl MeanCi {
    pub fn from_values(v: &[f64]) -> MeanCi {
        // Welford: exact for identical values
        let (mut mean, mut m2) = (0.0, 0.0);
        for (i, x) in v.iter().enumerate() {
            let d = x - mean;
            mean += d / (i + 1) as f64;
            m2 += d * (x - mean);
        }
        if v.len() < 2 {
            return MeanCi {
                mean,
                half_width: 0.0,
            };
        }
        let n = v.len() as f64;
        MeanCi {
            mean,
            half_width: 1.96 * (m2 / (n - 1.0) / n).sqrt(),
        }
    }

    pub fn lo(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.mean + self.half_width
    }

    /// Standard error implied by the half-width.
    pub fn stderr(&self) -> f64 {
        self.half_width / 1.96
    }
}

/// Aggregated metrics at one evaluation trial.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub t: usize,
    pub strategy: Strategy,
    pub n_reps: usize,
    pub entropy: MeanCi,
    pub rmse_w: MeanCi,
    pub rmse_a: Option<MeanCi>,
    pub rmse_pi: Option<MeanCi>,
}

/// Per-trial mean and CI across replications, by strategy. Rows are
/// matched on `t`; the result does not depend on replication order beyond
/// floating-point summation.
pub fn aggregate(reps: &[RunResult]) -> Vec<CurveRow> {
    let mut out = Vec::new();
    let Some(first) = reps.first() else {
        return out;
    };
    for (si, sr) in first.runs.iter().enumerate() {
        for (mi, m) in sr.metrics.iter().enumerate() {
            let rows: Vec<&MetricRow> = reps
                .iter()
                .filter_map(|r| r.runs.get(si).and_then(|s| s.metrics.get(mi)))
                .filter(|row| row.t == m.t)
                .collect();
            let col = |f: &dyn Fn(&MetricRow) -> f64| {
                MeanCi::from_values(&rows.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            let opt = |f: &dyn Fn(&MetricRow) -> Option<f64>| {
                let v: Option<Vec<f64>> = rows.iter().map(|r| f(r)).collect();
                v.map(|v| MeanCi::from_values(&v))
            };
            out.push(CurveRow {
                t: m.t,
                strategy: sr.strategy,
                n_reps: rows.len(),
                entropy: col(&|r| r.entropy),
                rmse_w: col(&|r| r.rmse_w),
                rmse_a: opt(&|r| r.rmse_a),
                rmse_pi: opt(&|r| r.rmse_pi),
            });
        }
    }
    out
}

pub fn write_curves(rows: &[CurveRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "t",
        "strategy",
        "n_reps",
        "entropy_mean",
        "entropy_ci",
        "rmse_w_mean",
        "rmse_w_ci",
        "rmse_A_mean",
        "rmse_A_ci",
        "rmse_pi_mean",
        "rmse_pi_ci",
    ])?;
    let pair = |m: Option<MeanCi>| match m {
        Some(m) => [m.mean.to_string(), m.half_width.to_string()],
        None => [String::new(), String::new()],
    };
    for r in rows {
        let mut rec = vec![
            r.t.to_string(),
            r.strategy.to_string(),
            r.n_reps.to_string(),
            r.entropy.mean.to_string(),
            r.entropy.half_width.to_string(),
            r.rmse_w.mean.to_string(),
            r.rmse_w.half_width.to_string(),
        ];
        rec.extend(pair(r.rmse_a));
        rec.extend(pair(r.rmse_pi));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Replications with distinct derived seeds, run concurrently.
#[derive(Clone, Debug)]
pub struct Replicated {
    pub reps: Vec<RunResult>,
    pub curves: Vec<CurveRow>,
}

impl Replicated {
    /// Final-trial aggregate for one strategy.
    pub fn final_row(&self, s: Strategy) -> Option<&CurveRow> {
        self.curves.iter().rev().find(|r| r.strategy == s)
    }

    /// Top-level files describe replication 0 plus `curves.csv`; every
    /// replication also gets its own `rep-<r>/` directory when there are
    /// several.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        write_run_files(&self.reps[0], dir)?;
        write_curves(&self.curves, &dir.join("curves.csv"))?;
        if self.reps.len() > 1 {
            for (i, r) in self.reps.iter().enumerate() {
                write_run_files(r, &dir.join(format!("rep-{i}")))?;
            }
        }
        Ok(())
    }
}

/// `n_reps` closed-loop replications. Replication `r` uses
/// [`replication_seed`]`(cfg.seed, r)`.
pub fn run_replicated(
    cfg: &ExperimentConfig,
    n_reps: usize,
    opts: &LoopOptions<'_>,
) -> Result<Replicated> {
    replicate(cfg, n_reps, opts.exec, |c| {
        run_closed_loop(
            c,
            &LoopOptions {
                exec: opts.exec,
                progress: opts.progress,
            },
        )
    })
}

/// Pool-based counterpart of [`run_replicated`].
pub fn run_pool_replicated(
    cfg: &ExperimentConfig,
    pool: &CandidateSet,
    reference: &ParamBundle,
    n_reps: usize,
    opts: &LoopOptions<'_>,
) -> Result<Replicated> {
    replicate(cfg, n_reps, opts.exec, |c| {
        run_pool(
            c,
            pool,
            reference,
            &LoopOptions {
                exec: opts.exec,
                progress: opts.progress,
            },
        )
    })
}

fn replicate<F>(cfg: &ExperimentConfig, n_reps: usize, exec: Execution, f: F) -> Result<Replicated>
where
    F: Fn(&ExperimentConfig) -> Result<RunResult> + Sync + Send,
{
    if n_reps == 0 {
        return Err(Error::config("at least one replication is required"));
    }
    let results = par::map_range(n_reps, exec, |r| {
        let mut c = cfg.clone();
        c.seed = replication_seed(cfg.seed, r);
        f(&c)
    });
    let reps: Vec<RunResult> = results.into_iter().collect::<Result<_>>()?;
    let curves = aggregate(&reps);
    Ok(Replicated { reps, curves })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelFamily;
    use crate::data::CandidateSpec;
    use crate::mlr::MlrParams;

    fn mlr_cfg(trials: usize, strategies: Vec<Strategy>) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(ModelFamily::Mlr, 2, 2);
        c.trials = trials;
        c.samples = 60;
        c.burn_in = 20;
        c.metric_cadence = trials.max(1);
        c.strategies = strategies;
        c.candidates = CandidateSpec::CircleGrid { step_deg: 10.0 };
        c.truth = Some(ParamBundle::Mlr(MlrParams {
            weights: vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
            pi: vec![0.6, 0.4],
            sigma_sq: 0.1,
        }));
        c
    }

    fn pool(n: usize) -> CandidateSet {
        let xs: Vec<Vec<f64>> = (0..n).map(|i| vec![(i as f64 * 0.37).sin(), 1.0]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x[0] + 0.1).collect();
        CandidateSet::pool(xs, ys).unwrap()
    }

    fn reference() -> ParamBundle {
        ParamBundle::Mlr(MlrParams {
            weights: vec![vec![2.0, 0.1], vec![-2.0, 0.0]],
            pi: vec![0.5, 0.5],
            sigma_sq: 0.1,
        })
    }

    #[test]
    fn zero_trials_is_empty() {
        let r = run_closed_loop(
            &mlr_cfg(0, vec![Strategy::Random, Strategy::InfomaxGibbs]),
            &LoopOptions::default(),
        )
        .unwrap();
        assert!(r
            .runs
            .iter()
            .all(|s| s.log.is_empty() && s.metrics.is_empty()));
    }

    #[test]
    fn identical_seed_is_deterministic() {
        let c = mlr_cfg(15, vec![Strategy::InfomaxGibbs, Strategy::Random]);
        let a = run_closed_loop(&c, &LoopOptions::default()).unwrap();
        let b = run_closed_loop(
            &c,
            &LoopOptions {
                exec: Execution::Sequential,
                progress: None,
            },
        )
        .unwrap();
        for (x, y) in a.runs.iter().zip(&b.runs) {
            assert_eq!(x.log, y.log);
            assert_eq!(x.chosen, y.chosen);
            assert_eq!(x.metrics.len(), y.metrics.len());
            assert_eq!(x.metrics[0].entropy, y.metrics[0].entropy);
        }
    }

    #[test]
    fn random_selections_are_uniform_over_angles() {
        let r = run_closed_loop(
            &mlr_cfg(200, vec![Strategy::Random]),
            &LoopOptions::default(),
        )
        .unwrap();
        let h = r.histogram(Strategy::Random).unwrap().unwrap();
        assert_eq!((h.counts.len(), h.total()), (36, 200));
        let e = 200.0 / 36.0;
        let chi2: f64 = h.counts.iter().map(|c| (*c as f64 - e).powi(2) / e).sum();
        // 99.9% point of chi-square with 35 degrees of freedom
        assert!(chi2 < 66.62, "chi2 = {chi2}");
    }

    #[test]
    fn warmup_trials_are_not_attributed_to_the_strategy() {
        let r = run_closed_loop(
            &mlr_cfg(14, vec![Strategy::InfomaxGibbs]),
            &LoopOptions::default(),
        )
        .unwrap();
        let s = r.run(Strategy::InfomaxGibbs).unwrap();
        assert_eq!(s.strategy_selections().len(), 4);
        assert_eq!(s.true_states.len(), 14);
    }

    #[test]
    fn pool_rows_are_consumed_once() {
        let mut c = mlr_cfg(30, vec![Strategy::Random, Strategy::InfomaxGibbs]);
        c.truth = None;
        let p = pool(30);
        let r = run_pool(&c, &p, &reference(), &LoopOptions::default()).unwrap();
        for s in &r.runs {
            let mut seen = s.chosen.clone();
            seen.sort_unstable();
            assert_eq!(seen, (0..30).collect::<Vec<_>>());
            for (i, idx) in s.chosen.iter().enumerate() {
                assert_eq!(s.log.y(i), p.stored_output(*idx).unwrap());
            }
        }
        c.trials = 31;
        assert!(matches!(
            run_pool(&c, &p, &reference(), &LoopOptions::default()),
            Err(Error::PoolExhausted)
        ));
    }

    #[test]
    fn pool_subsample_of_candidates() {
        let mut c = mlr_cfg(12, vec![Strategy::InfomaxGibbs]);
        c.truth = None;
        c.pool_candidates = 5;
        let r = run_pool(&c, &pool(100), &reference(), &LoopOptions::default()).unwrap();
        let s = &r.runs[0];
        let mut u = s.chosen.clone();
        u.sort_unstable();
        u.dedup();
        assert_eq!(u.len(), 12);
    }

    #[test]
    fn single_replication_has_zero_width() {
        let c = mlr_cfg(12, vec![Strategy::Random]);
        let r = run_replicated(&c, 1, &LoopOptions::default()).unwrap();
        assert!(r
            .curves
            .iter()
            .all(|row| row.n_reps == 1 && row.entropy.half_width == 0.0));
    }

    #[test]
    fn identical_runs_have_zero_variance() {
        let c = mlr_cfg(12, vec![Strategy::Random]);
        let a = run_closed_loop(&c, &LoopOptions::default()).unwrap();
        let rows = aggregate(&[a.clone(), a.clone(), a]);
        assert!(rows
            .iter()
            .all(|r| r.n_reps == 3 && r.entropy.half_width == 0.0 && r.rmse_w.half_width == 0.0));
    }

    #[test]
    fn aggregation_ignores_order() {
        let c = mlr_cfg(12, vec![Strategy::Random]);
        let r = run_replicated(&c, 3, &LoopOptions::default()).unwrap();
        let mut rev = r.reps.clone();
        rev.reverse();
        let b = aggregate(&rev);
        for (x, y) in r.curves.iter().zip(&b) {
            assert!((x.entropy.mean - y.entropy.mean).abs() < 1e-12);
            assert!((x.entropy.half_width - y.entropy.half_width).abs() < 1e-12);
        }
        assert!(r.reps[0].seed != r.reps[1].seed);
    }

    #[test]
    fn mean_ci_formula() {
        let m = MeanCi::from_values(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        let se = (1.25f64 * 4.0 / 3.0 / 4.0).sqrt();
        assert!((m.half_width - 1.96 * se).abs() < 1e-12);
    }

    #[test]
    fn output_directory_layout() {
        let c = mlr_cfg(12, vec![Strategy::InfomaxGibbs, Strategy::Random]);
        let r = run_replicated(&c, 2, &LoopOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        r.write_dir(dir.path()).unwrap();
        for f in [
            "config.txt",
            "log.csv",
            "log-infomax-gibbs.csv",
            "log-random.csv",
            "metrics.csv",
            "histogram.csv",
            "curves.csv",
            "rep-1/log.csv",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let text = fs::read_to_string(dir.path().join("config.txt")).unwrap();
        assert!(ExperimentConfig::parse(&text).is_ok());
        let curves = fs::read_to_string(dir.path().join("curves.csv")).unwrap();
        assert_eq!(curves.lines().count(), 3);
    }
}
