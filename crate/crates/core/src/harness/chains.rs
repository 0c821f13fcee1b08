//! Timing of single-chain versus multi-chain posterior refits.

use std::time::Instant;

use rand::Rng;

use super::inference::run_parallel_chains;
use super::run::build_candidates;
use super::simulator::Simulator;
use crate::config::{ExperimentConfig, Strategy};
use crate::data::{ExperimentLog, LogMeta};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::rng::{labels, RngStream};

/// `trials` simulated trials with inputs drawn uniformly from the
/// configured candidates.
pub fn simulate_random_log(
    cfg: &ExperimentConfig,
    trials: usize,
    seed: u64,
) -> Result<ExperimentLog> {
    let truth = cfg
        .truth
        .clone()
        .ok_or_else(|| Error::config("simulation needs generative parameters"))?;
    let candidates = build_candidates(cfg)?;
    let root = RngStream::new(seed, 0);
    let mut sim = Simulator::new(truth, &root)?;
    let mut pick = root.fork(labels::SELECTION);
    let mut log = ExperimentLog::new(
        cfg.d,
        LogMeta {
            family: cfg.family,
            seed,
            strategy: Strategy::Random,
        },
    );
    for _ in 0..trials {
        let x = candidates
            .input(pick.random_range(0..candidates.len()))
            .to_vec();
        let y = sim.respond(&x)?;
        log.push(x, y)?;
    }
    Ok(log)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainTiming {
    pub chains: usize,
    /// Burn-in plus retained sweeps of one chain.
    pub sweeps_per_chain: usize,
    /// Median wall-clock time of one cold refit.
    pub wall_ms: f64,
    /// Single-chain time divided by this row's time.
    pub speedup: f64,
}

/// Time cold refits of the same log with each chain count. A single-chain
/// refit runs `burn_in + M` sweeps; a C-chain refit runs `C` chains of
/// `burn_in + M/C` sweeps concurrently.
pub fn chain_timing(
    cfg: &ExperimentConfig,
    log: &ExperimentLog,
    chain_counts: &[usize],
    repeats: usize,
    exec: Execution,
) -> Result<Vec<ChainTiming>> {
    let mut rows = Vec::new();
    for &c in chain_counts {
        let mut times = Vec::with_capacity(repeats.max(1));
        for r in 0..repeats.max(1) {
            let base = RngStream::new(cfg.seed, labels::INFERENCE)
                .fork_indexed(labels::REPLICATION, r as u64);
            let clock = Instant::now();
            run_parallel_chains(log, cfg, c, &base, None, exec)?;
            times.push(clock.elapsed().as_secs_f64() * 1e3);
        }
        times.sort_by(f64::total_cmp);
        rows.push(ChainTiming {
            chains: c,
            sweeps_per_chain: cfg.burn_in + cfg.samples / c.max(1),
            wall_ms: times[times.len() / 2],
            speedup: f64::NAN,
        });
    }
    let single = rows.iter().find(|r| r.chains == 1).map(|r| r.wall_ms);
    for r in rows.iter_mut() {
        r.speedup = single.map_or(f64::NAN, |s| s / r.wall_ms);
    }
    Ok(rows)
}

/// Header `chains,sweeps_per_chain,wall_ms,speedup,threads`.
pub fn write_timing_csv<W: std::io::Write>(out: W, rows: &[ChainTiming]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "chains",
        "sweeps_per_chain",
        "wall_ms",
        "speedup",
        "threads",
    ])?;
    let threads = par::current_num_threads().to_string();
    for r in rows {
        w.write_record([
            r.chains.to_string(),
            r.sweeps_per_chain.to_string(),
            r.wall_ms.to_string(),
            r.speedup.to_string(),
            threads.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
