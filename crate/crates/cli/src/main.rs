use std::fs::{self, File};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use latent_infomax::config::parse_vec;
use latent_infomax::fisher::{
    angle_grid, fisher_angle_scan, fisher_identifiable, symmetric_model, write_scan_csv,
};
use latent_infomax::harness::chains::write_timing_csv;
use latent_infomax::harness::housing::{self, bic_table, configure_from_reference, reference_fit};
use latent_infomax::harness::{
    chain_timing, preset, run_pool_replicated, run_replicated, run_state_decoding_eval,
    simulate_random_log, LoopOptions, PRESETS,
};
use latent_infomax::infomax::metrics::{BicOptions, MetricRow};
use latent_infomax::infomax::ParamBundle;
use latent_infomax::par::Execution;
use latent_infomax::{CandidateSpec, Error, ExperimentConfig, Strategy};

#[derive(Parser)]
#[command(
    name = "latent-infomax",
    version,
    about = "Infomax input selection for latent variable regression models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-loop experiment against a simulated system.
    Simulate(RunArgs),
    /// Pool-based experiment on recorded data, with a BIC table.
    Pool(PoolArgs),
    /// Fisher-information trace as a function of input angle.
    FisherScan(FisherArgs),
    /// Latent-state decoding with models trained by infomax and random selection.
    Decode(DecodeArgs),
    /// Wall-clock time of one refit with one chain versus several.
    ChainsBench(ChainsArgs),
}

#[derive(Args)]
struct Source {
    /// Named preset.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    src: Source,
    /// Comma-separated strategies, e.g. random,infomax-gibbs.
    #[arg(long)]
    strategies: Option<String>,
    /// Number of replications.
    #[arg(long)]
    reps: Option<usize>,
    /// Number of trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Suppress progress lines.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct PoolArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Pool CSV: either prepared (`y,x0,...`) or raw housing data.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Largest state count in the BIC table.
    #[arg(long, default_value_t = 5)]
    k_max: usize,
}

#[derive(Args)]
struct FisherArgs {
    #[command(flatten)]
    src: Source,
    /// Comma-separated noise variances.
    #[arg(long, default_value = "0.1,0.5,1.0")]
    sigma_sq: String,
    /// Angle step in degrees.
    #[arg(long, default_value_t = 10.0)]
    step: f64,
    /// Monte Carlo draws per grid point.
    #[arg(long, default_value_t = 20_000)]
    mc_samples: usize,
}

#[derive(Args)]
struct DecodeArgs {
    #[command(flatten)]
    src: Source,
    /// Training trials per strategy.
    #[arg(long, default_value_t = 400)]
    train: usize,
    /// Held-out evaluation trials.
    #[arg(long, default_value_t = 100)]
    eval: usize,
}

#[derive(Args)]
struct ChainsArgs {
    #[command(flatten)]
    src: Source,
    /// Chain count compared against a single chain.
    #[arg(long, default_value_t = 5)]
    chains: usize,
    /// Length of the simulated log being refit.
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Timed refits per chain count (the median is reported).
    #[arg(long, default_value_t = 3)]
    repeats: usize,
}

/// Exit 2 for configuration problems, 3 for failures while running.
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Malformed { .. } => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn load(src: &Source, default_preset: &str) -> CliResult<ExperimentConfig> {
    let mut cfg = match (&src.preset, &src.config) {
        (_, Some(p)) => {
            ExperimentConfig::load(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?
        }
        (Some(name), None) => preset(name).map_err(config_err)?,
        (None, None) => preset(default_preset).map_err(config_err)?,
    };
    if let Some(s) = src.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(src: &Source, cfg: &ExperimentConfig, what: &str) -> PathBuf {
    src.out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(format!("{what}-{}", cfg.name)))
}

fn apply_run_args(cfg: &mut ExperimentConfig, a: &RunArgs) -> CliResult<usize> {
    if let Some(s) = &a.strategies {
        cfg.strategies = Strategy::parse_list(s).map_err(config_err)?;
        cfg.strategy = cfg.strategies[0];
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    let reps = a.reps.unwrap_or(cfg.replications);
    if reps == 0 {
        return Err(Failure::Config("--reps must be at least 1".into()));
    }
    cfg.validate().map_err(config_err)?;
    Ok(reps)
}

fn print_progress(row: &MetricRow) {
    println!(
        "trial={} strategy={} entropy={}",
        row.t, row.strategy, row.entropy
    );
}

fn simulate(a: &RunArgs) -> CliResult<()> {
    let mut cfg = load(&a.src, "mlr2d")?;
    let reps = apply_run_args(&mut cfg, a)?;
    let dir = out_dir(&a.src, &cfg, "simulate");
    let progress: &(dyn Fn(&MetricRow) + Sync) = &print_progress;
    let opts = LoopOptions {
        exec: Execution::Auto,
        progress: (!a.quiet).then_some(progress),
    };
    let result = run_replicated(&cfg, reps, &opts)?;
    result.write_dir(&dir)?;
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn pool(a: &PoolArgs) -> CliResult<()> {
    let mut cfg = load(&a.run.src, "housing")?;
    if let Some(p) = &a.data {
        cfg.candidates = CandidateSpec::PoolFile { path: p.clone() };
    }
    let reps = apply_run_args(&mut cfg, &a.run)?;
    let path = match &cfg.candidates {
        CandidateSpec::PoolFile { path } => path.clone(),
        _ => {
            return Err(Failure::Config(
                "pool runs need candidates = pool:<path> or --data".into(),
            ))
        }
    };
    let pool =
        housing::load_pool(&path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    if pool.dim() != cfg.d {
        return Err(Failure::Config(format!(
            "pool has dimension {}, config has D={}",
            pool.dim(),
            cfg.d
        )));
    }
    let dir = out_dir(&a.run.src, &cfg, "pool");
    fs::create_dir_all(&dir).map_err(|e| Failure::Runtime(e.to_string()))?;

    let opts = BicOptions {
        seed: cfg.seed,
        ..BicOptions::default()
    };
    let ks: Vec<usize> = (1..=a.k_max.max(cfg.k)).collect();
    let table = bic_table(&pool, &ks, &opts)?;
    let mut w =
        csv::Writer::from_path(dir.join("bic.csv")).map_err(|e| Failure::Runtime(e.to_string()))?;
    let io = |e: csv::Error| Failure::Runtime(e.to_string());
    w.write_record(["k", "bic", "log_lik", "n_params", "converged"])
        .map_err(io)?;
    for (k, b) in &table {
        w.write_record([
            k.to_string(),
            b.bic.to_string(),
            b.log_lik.to_string(),
            b.n_params.to_string(),
            b.converged.to_string(),
        ])
        .map_err(io)?;
        println!("k={k} bic={}", b.bic);
    }
    w.flush().map_err(|e| Failure::Runtime(e.to_string()))?;

    let fit = match table.iter().find(|(k, _)| *k == cfg.k) {
        Some((_, b)) => b.clone(),
        None => reference_fit(&pool, cfg.k, &opts)?,
    };
    let reference = configure_from_reference(&mut cfg, &fit);
    let progress: &(dyn Fn(&MetricRow) + Sync) = &print_progress;
    let lopts = LoopOptions {
        exec: Execution::Auto,
        progress: (!a.run.quiet).then_some(progress),
    };
    let result = run_pool_replicated(&cfg, &pool, &reference, reps, &lopts)?;
    result.write_dir(&dir)?;
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn fisher_scan(a: &FisherArgs) -> CliResult<()> {
    let sigma_sqs = parse_vec(&a.sigma_sq.replace(",", " "), "sigma_sq").map_err(config_err)?;
    if sigma_sqs.is_empty() || sigma_sqs.iter().any(|s| !(*s > 0.0)) {
        return Err(Failure::Config(format!(
            "malformed noise variance list '{}'",
            a.sigma_sq
        )));
    }
    if !(a.step > 0.0 && a.step <= 360.0) {
        return Err(Failure::Config("--step must be in (0, 360]".into()));
    }
    let (model, seed, name) = if a.src.preset.is_some() || a.src.config.is_some() {
        let cfg = load(&a.src, "mlr2d")?;
        match cfg.truth {
            Some(ParamBundle::Mlr(p)) => (p, cfg.seed, cfg.name),
            _ => {
                return Err(Failure::Config(
                    "fisher-scan needs an MLR configuration with truth parameters".into(),
                ))
            }
        }
    } else {
        (
            symmetric_model(sigma_sqs[0]),
            a.src.seed.unwrap_or(0),
            "symmetric".to_string(),
        )
    };
    let seed = a.src.seed.unwrap_or(seed);
    let rows = fisher_angle_scan(
        &model,
        &angle_grid(a.step),
        &sigma_sqs,
        a.mc_samples,
        seed,
        Execution::Auto,
    )?;
    let dir = a
        .src
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(format!("fisher-{name}")));
    fs::create_dir_all(&dir).map_err(|e| Failure::Runtime(e.to_string()))?;
    write_scan_csv(
        File::create(dir.join("fisher.csv")).map_err(|e| Failure::Runtime(e.to_string()))?,
        &rows,
    )?;
    for s in &sigma_sqs {
        let closed = fisher_identifiable(&[1.0, 0.0], &model.pi, *s)?.trace();
        let mc = rows
            .iter()
            .find(|r| r.sigma_sq == *s && r.angle_deg == 0.0)
            .map(|r| r.trace);
        println!(
            "sigma_sq={s} trace_0deg={} identifiable_bound={closed}",
            mc.unwrap_or(f64::NAN)
        );
    }
    eprintln!("wrote {}", dir.join("fisher.csv").display());
    Ok(())
}

fn decode(a: &DecodeArgs) -> CliResult<()> {
    let cfg = load(&a.src, "iohmm")?;
    cfg.validate().map_err(config_err)?;
    let report = run_state_decoding_eval(&cfg, a.train, a.eval, Execution::Auto)?;
    let dir = out_dir(&a.src, &cfg, "decode");
    report.write_dir(&dir)?;
    for r in &report.rows {
        println!("model={} accuracy={}", r.model, r.accuracy);
    }
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn chains_bench(a: &ChainsArgs) -> CliResult<()> {
    let mut cfg = load(&a.src, "iohmm-chains")?;
    if a.chains == 0 {
        return Err(Failure::Config("--chains must be at least 1".into()));
    }
    cfg.chains = 1;
    cfg.validate().map_err(config_err)?;
    if cfg.samples % a.chains != 0 {
        return Err(Failure::Config(format!(
            "M = {} is not divisible by {} chains",
            cfg.samples, a.chains
        )));
    }
    let log = simulate_random_log(&cfg, a.trials, cfg.seed)?;
    let counts: Vec<usize> = if a.chains == 1 {
        vec![1]
    } else {
        vec![1, a.chains]
    };
    let rows = chain_timing(&cfg, &log, &counts, a.repeats, Execution::Auto)?;
    let dir = out_dir(&a.src, &cfg, "chains");
    fs::create_dir_all(&dir).map_err(|e| Failure::Runtime(e.to_string()))?;
    write_timing_csv(
        File::create(dir.join("chains.csv")).map_err(|e| Failure::Runtime(e.to_string()))?,
        &rows,
    )?;
    for r in &rows {
        println!(
            "chains={} wall_ms={:.1} speedup={:.2}",
            r.chains, r.wall_ms, r.speedup
        );
    }
    eprintln!("wrote {}", dir.join("chains.csv").display());
    Ok(())
}

fn preset_help() -> String {
    let mut s = String::from("Presets:\n");
    for (name, about) in PRESETS {
        s.push_str(&format!("  {name:<14}{about}\n"));
    }
    s
}

fn main() -> ExitCode {
    let help = preset_help();
    let cmd = Cli::command()
        .after_help(help.clone())
        .mut_subcommands(|c| c.after_help(help.clone()));
    let cli = match Cli::from_arg_matches(&cmd.get_matches()) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Pool(a) => pool(a),
        Command::FisherScan(a) => fisher_scan(a),
        Command::Decode(a) => decode(a),
        Command::ChainsBench(a) => chains_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
