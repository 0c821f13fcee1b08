//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line to
//! stderr (bypassing output capture) before asserting.

use std::io::Write;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use latent_infomax::config::Strategy;
use latent_infomax::fisher::{
    angle_grid, dip_width, fisher_angle_scan, fisher_identifiable, fisher_mc_trace,
    fisher_nonidentifiable, symmetric_model, unit_input, ScanRow,
};
use latent_infomax::harness::housing::{self, bic_table, configure_from_reference};
use latent_infomax::harness::{
    chain_timing, preset, replication_seed, run_pool_replicated, run_replicated,
    run_state_decoding_eval, simulate_random_log, LoopOptions, Replicated,
};
use latent_infomax::infomax::metrics::{angle_deg, BicOptions, MetricRow};
use latent_infomax::iohmm::glm::{
    glm_sample_posterior, laplace_fit, ln_posterior, mh_step, BernoulliData, GaussianSurrogate,
    GlmPrior,
};
use latent_infomax::iohmm::hmm::{forward_backward, sample_state_sequence};
use latent_infomax::par::Execution;
use latent_infomax::randkit::sample_dirichlet_alpha;
use latent_infomax::rng::RngStream;
use nalgebra::DMatrix;
use rand::Rng;
use statrs::distribution::{Binomial, DiscreteCDF};

fn report(n: usize, name: &str, pass: bool, detail: &str) {
    let line = format!(
        "acceptance {n:>2} {name}: {} ({detail})\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Standard error of the mean.
fn se(v: &[f64]) -> f64 {
    let m = mean(v);
    let n = v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
}

fn finals(r: &Replicated, s: Strategy) -> Vec<MetricRow> {
    r.reps
        .iter()
        .map(|rep| {
            rep.run(s)
                .and_then(|x| x.final_metrics())
                .expect("final metrics")
                .clone()
        })
        .collect()
}

fn col(rows: &[MetricRow], f: impl Fn(&MetricRow) -> f64) -> Vec<f64> {
    rows.iter().map(f).collect()
}

fn opts() -> LoopOptions<'static> {
    LoopOptions {
        exec: Execution::Auto,
        progress: None,
    }
}

// ---------------------------------------------------------------- Fisher

#[test]
fn fisher_closed_forms() {
    let clock = Instant::now();
    let pi = [0.5, 0.5];
    let ident = fisher_identifiable(&[1.0, 0.0], &pi, 0.1).unwrap().trace();
    let orth = fisher_nonidentifiable(&[0.0, 1.0], &pi, 0.1)
        .unwrap()
        .trace();
    let mut ok = (ident - 10.0).abs() < 1e-9 && (orth - 5.0).abs() < 1e-9;
    let mut worst = 0.0f64;
    let mut rng = RngStream::new(1, 0);
    for k in 1..=6 {
        let u = vec![1.0 / k as f64; k];
        for _ in 0..20 {
            let d = rng.random_range(1..6);
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let s2 = rng.random_range(0.05..3.0);
            let a = fisher_identifiable(&x, &u, s2).unwrap().trace();
            let b = fisher_nonidentifiable(&x, &u, s2).unwrap().trace();
            worst = worst.max((b - a / k as f64).abs());
        }
    }
    ok &= worst < 1e-9;
    let secs = clock.elapsed().as_secs_f64();
    ok &= secs < 1.0;
    report(1, "Fisher closed forms", ok, &format!("identifiable {ident}, orthogonal {orth}, max |J_orth - J_id/K| {worst:.1e}, {secs:.2} s"));
    assert!(ok);
}

#[test]
fn fisher_monte_carlo_curve() {
    let clock = Instant::now();
    let m = symmetric_model(0.1);
    let mut rng = RngStream::new(2, 0);
    let n = 100_000;
    let t0 = fisher_mc_trace(&unit_input(0.0), &m, n, &mut rng).unwrap();
    let t90 = fisher_mc_trace(&unit_input(90.0), &m, n, &mut rng).unwrap();
    let c0 = fisher_identifiable(&[1.0, 0.0], &m.pi, 0.1)
        .unwrap()
        .trace();
    let c90 = fisher_nonidentifiable(&[0.0, 1.0], &m.pi, 0.1)
        .unwrap()
        .trace();
    let z0 = (t0.trace - c0).abs() / t0.stderr.unwrap();
    let z90 = (t90.trace - c90).abs() / t90.stderr.unwrap().max(1e-300);
    let endpoints = z0 <= 3.0 && (z90 <= 3.0 || (t90.trace - c90).abs() < 1e-9);

    let step = 2.0;
    let sigmas = [0.1, 0.5, 1.0];
    let rows =
        fisher_angle_scan(&m, &angle_grid(step), &sigmas, 20_000, 3, Execution::Auto).unwrap();
    let mut shape = true;
    let mut widths = Vec::new();
    for &s2 in &sigmas {
        let half: Vec<&ScanRow> = rows
            .iter()
            .filter(|r| r.sigma_sq == s2 && r.angle_deg <= 180.0)
            .collect();
        let tol = |r: &ScanRow| 3.0 * r.stderr.unwrap_or(0.0);
        let min_i = (0..half.len())
            .min_by(|a, b| half[*a].trace.total_cmp(&half[*b].trace))
            .unwrap();
        // descending into the dip, rising out of it, within MC noise
        for i in 1..half.len() {
            let (p, q) = (half[i - 1], half[i]);
            let slack = tol(p) + tol(q);
            if i <= min_i && q.trace > p.trace + slack {
                shape = false;
            }
            if i > min_i && q.trace < p.trace - slack {
                shape = false;
            }
        }
        shape &= (half[min_i].angle_deg - 90.0).abs() <= 10.0;
        widths.push(dip_width(&rows, s2, 1.0 / s2, 0.75, step));
    }
    let widening = widths.windows(2).all(|w| w[1] >= w[0]) && widths[2] > widths[0];
    let secs = clock.elapsed().as_secs_f64();
    let ok = endpoints && shape && widening && secs < 30.0;
    report(
        2,
        "Fisher Monte Carlo curve",
        ok,
        &format!(
            "0deg {:.4}±{:.4} vs {c0} (z={z0:.2}), 90deg {:.4} vs {c90} (z={z90:.2}), dip widths {widths:?}, {secs:.1} s",
            t0.trace,
            t0.stderr.unwrap(),
            t90.trace
        ),
    );
    assert!(ok);
}

// ---------------------------------------------------------------- oracles

fn enumerate(ln_lik: &[Vec<f64>], pi0: &[f64], a: &[Vec<f64>]) -> Vec<(Vec<usize>, f64)> {
    let (t_len, k) = (ln_lik.len(), pi0.len());
    let n = k.pow(t_len as u32);
    let mut out: Vec<(Vec<usize>, f64)> = (0..n)
        .map(|mut code| {
            let path: Vec<usize> = (0..t_len)
                .map(|_| {
                    let s = code % k;
                    code /= k;
                    s
                })
                .collect();
            let mut lp = pi0[path[0]].ln() + ln_lik[0][path[0]];
            for t in 1..t_len {
                lp += a[path[t - 1]][path[t]].ln() + ln_lik[t][path[t]];
            }
            (path, lp)
        })
        .collect();
    let mx = out.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = out.iter().map(|p| (p.1 - mx).exp()).sum();
    for p in out.iter_mut() {
        p.1 = (p.1 - mx).exp() / z;
    }
    out
}

#[test]
fn forward_backward_matches_enumeration() {
    let clock = Instant::now();
    let mut rng = RngStream::new(3, 0);
    let draws = 20_000;
    let mut worst_marg = 0.0f64;
    let mut worst_z = 0.0f64;
    for _ in 0..100 {
        let k = rng.random_range(1..=3);
        let t_len = rng.random_range(1..=8);
        let pi0 = sample_dirichlet_alpha(&vec![1.0; k], &mut rng).unwrap();
        let a: Vec<Vec<f64>> = (0..k)
            .map(|_| sample_dirichlet_alpha(&vec![1.0; k], &mut rng).unwrap())
            .collect();
        let ln_lik: Vec<Vec<f64>> = (0..t_len)
            .map(|_| (0..k).map(|_| rng.random_range(-3.0..0.0)).collect())
            .collect();
        let exact = enumerate(&ln_lik, &pi0, &a);
        let msgs = forward_backward(&ln_lik, &pi0, &a).unwrap();
        let post = msgs.posteriors();
        for t in 0..t_len {
            for s in 0..k {
                let m: f64 = exact.iter().filter(|p| p.0[t] == s).map(|p| p.1).sum();
                worst_marg = worst_marg.max((m - post[t][s]).abs());
            }
        }
        let mut counts = std::collections::HashMap::new();
        for _ in 0..draws {
            *counts
                .entry(sample_state_sequence(&pi0, &a, &msgs, &mut rng))
                .or_insert(0usize) += 1;
        }
        let mut top = exact.clone();
        top.sort_by(|x, y| y.1.total_cmp(&x.1));
        for (path, p) in top.iter().take(5) {
            let f = *counts.get(path).unwrap_or(&0) as f64 / draws as f64;
            let sd = (p * (1.0 - p) / draws as f64).sqrt();
            if sd > 0.0 {
                worst_z = worst_z.max((f - p).abs() / sd);
            } else if (f - p).abs() > 0.0 {
                worst_z = f64::INFINITY;
            }
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    let ok = worst_marg < 1e-8 && worst_z < 4.0 && secs < 120.0;
    report(
        3,
        "forward-backward oracle",
        ok,
        &format!("max marginal error {worst_marg:.1e}, max path |z| {worst_z:.2}, {secs:.1} s"),
    );
    assert!(ok);
}

#[test]
fn laplace_metropolis_sanity() {
    let clock = Instant::now();
    let mut rng = RngStream::new(4, 0);
    // Gaussian target: the Laplace proposal is exact
    let sur = GaussianSurrogate {
        mean: vec![0.7, -1.2, 0.3],
        precision: DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, -0.4, 0.5, -0.4, 2.0]),
    };
    let prior = GlmPrior {
        w0: vec![0.0; 3],
        sigma0_sq: 10.0,
    };
    let prop = laplace_fit(&sur, &prior, &[0.0; 3]).unwrap();
    let mut w = prop.map().iter().copied().collect::<Vec<f64>>();
    let mut accepted = 0;
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let o = mh_step(&sur, &prior, &prop, &w, &mut rng);
        accepted += o.accepted as usize;
        worst = worst.max(o.ln_ratio.abs());
        w = o.w;
    }

    // 1-D Bernoulli GLM against a fine grid
    let xs: Vec<Vec<f64>> = (0..40).map(|i| vec![-2.0 + 0.1 * i as f64]).collect();
    let ys: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(i, x)| ((x[0] * 1.5 + 0.3 * ((i * 7 % 5) as f64 - 2.0)) > 0.0) as u8 as f64)
        .collect();
    let mut data = BernoulliData::new(1);
    for (x, y) in xs.iter().zip(&ys) {
        data.push(x, *y);
    }
    let prior1 = GlmPrior {
        w0: vec![0.0],
        sigma0_sq: 10.0,
    };
    let (lo, hi, n) = (-30.0, 30.0, 60_001);
    let h = (hi - lo) / (n - 1) as f64;
    let lp: Vec<f64> = (0..n)
        .map(|i| ln_posterior(&data, &prior1, &[lo + h * i as f64]))
        .collect();
    let mx = lp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut m1) = (0.0, 0.0);
    for (i, l) in lp.iter().enumerate() {
        let wt = if i == 0 || i == n - 1 { 0.5 } else { 1.0 } * (l - mx).exp();
        z += wt;
        m1 += wt * (lo + h * i as f64);
    }
    let grid_mean = m1 / z;
    let mut w = vec![0.0];
    for _ in 0..500 {
        w = glm_sample_posterior(&data, &prior1, &w, &mut rng)
            .unwrap()
            .w;
    }
    let kept: Vec<f64> = (0..10_000)
        .map(|_| {
            w = glm_sample_posterior(&data, &prior1, &w, &mut rng)
                .unwrap()
                .w;
            w[0]
        })
        .collect();
    // batch means for the autocorrelated chain
    let batches: Vec<f64> = kept.chunks(200).map(mean).collect();
    let mc_mean = mean(&kept);
    let mc_se = se(&batches);
    let z_glm = (mc_mean - grid_mean).abs() / mc_se;
    let secs = clock.elapsed().as_secs_f64();
    let ok = accepted == 10_000 && z_glm < 3.0 && secs < 120.0;
    report(
        4,
        "Laplace-MH sanity",
        ok,
        &format!("{accepted}/10000 accepted (max |ln r| {worst:.1e}), GLM mean {mc_mean:.4}±{mc_se:.4} vs grid {grid_mean:.4}, {secs:.1} s"),
    );
    assert!(ok);
}

// ---------------------------------------------------------------- MLR loops

fn mlr2d_runs() -> &'static (Replicated, f64) {
    static RUNS: OnceLock<(Replicated, f64)> = OnceLock::new();
    RUNS.get_or_init(|| {
        let clock = Instant::now();
        let cfg = preset("mlr2d").unwrap();
        let r = run_replicated(&cfg, 10, &opts()).unwrap();
        (r, clock.elapsed().as_secs_f64())
    })
}

fn mlr10d_runs() -> &'static (Replicated, f64) {
    static RUNS: OnceLock<(Replicated, f64)> = OnceLock::new();
    RUNS.get_or_init(|| {
        let clock = Instant::now();
        let cfg = preset("mlr10d").unwrap();
        let r = run_replicated(&cfg, 5, &opts()).unwrap();
        (r, clock.elapsed().as_secs_f64())
    })
}

#[test]
fn mlr_closed_loop_ordering() {
    let (r2, s2) = mlr2d_runs();
    let (r10, s10) = mlr10d_runs();
    let row = |r: &Replicated, s| r.final_row(s).unwrap().clone();
    let (g2, rnd2) = (row(r2, Strategy::InfomaxGibbs), row(r2, Strategy::Random));
    let ok2 = g2.t == 200
        && g2.n_reps == 10
        && g2.entropy.mean < rnd2.entropy.mean
        && g2.entropy.hi() < rnd2.entropy.lo()
        && g2.rmse_w.mean < rnd2.rmse_w.mean;
    let (g10, v10, rnd10) = (
        row(r10, Strategy::InfomaxGibbs),
        row(r10, Strategy::InfomaxVi),
        row(r10, Strategy::Random),
    );
    let ok10 = g10.n_reps == 5
        && g10.entropy.mean < rnd10.entropy.mean
        && g10.rmse_w.mean < rnd10.rmse_w.mean
        && g10.rmse_w.mean <= v10.rmse_w.mean;
    let secs = s2 + s10;
    let ok = ok2 && ok10 && secs < 1800.0;
    report(
        5,
        "MLR closed-loop ordering",
        ok,
        &format!(
            "2-D entropy gibbs {:.2}±{:.2} vs random {:.2}±{:.2}, rmse {:.4} vs {:.4}; 10-D entropy {:.2} vs {:.2}, rmse gibbs {:.4} vi {:.4} random {:.4}; {secs:.0} s",
            g2.entropy.mean, g2.entropy.half_width, rnd2.entropy.mean, rnd2.entropy.half_width, g2.rmse_w.mean,
            rnd2.rmse_w.mean, g10.entropy.mean, rnd10.entropy.mean, g10.rmse_w.mean, v10.rmse_w.mean, rnd10.rmse_w.mean
        ),
    );
    assert!(ok);
}

#[test]
fn mlr_selection_histogram() {
    let (r2, _) = mlr2d_runs();
    let mut n = 0u64;
    let mut hits = 0u64;
    for rep in &r2.reps {
        let run = rep.run(Strategy::InfomaxGibbs).unwrap();
        for idx in run.strategy_selections() {
            let a = angle_deg(rep.candidates.input(idx));
            let near = |c: f64| (a - c).abs() <= 10.0 + 1e-9;
            n += 1;
            hits += (near(90.0) || near(270.0)) as u64;
        }
    }
    let share = 6.0 / 36.0;
    let p = Binomial::new(share, n).unwrap().cdf(hits);
    let ok = n > 0 && (hits as f64 / n as f64) < share && p < 0.05;
    report(
        6,
        "selection histogram avoids orthogonal inputs",
        ok,
        &format!("{hits}/{n} near 90/270 deg vs uniform share {share:.3}, one-sided p = {p:.2e}"),
    );
    assert!(ok);
}

// ---------------------------------------------------------------- IO-HMM

fn iohmm_runs() -> &'static (Replicated, f64) {
    static RUNS: OnceLock<(Replicated, f64)> = OnceLock::new();
    RUNS.get_or_init(|| {
        let clock = Instant::now();
        let cfg = preset("iohmm").unwrap();
        let r = run_replicated(&cfg, 5, &opts()).unwrap();
        (r, clock.elapsed().as_secs_f64())
    })
}

#[test]
fn iohmm_ordering() {
    let (r, secs) = iohmm_runs();
    let row = |s| r.final_row(s).unwrap().clone();
    let (g, mm, rnd) = (
        row(Strategy::InfomaxGibbs),
        row(Strategy::InfomaxGlmMismatch),
        row(Strategy::Random),
    );
    let a = |x: &latent_infomax::harness::CurveRow| x.rmse_a.unwrap().mean;
    let ok = g.t == 500
        && g.entropy.mean < mm.entropy.mean
        && mm.entropy.mean < rnd.entropy.mean
        && g.entropy.hi() < rnd.entropy.lo()
        && a(&g) < a(&rnd)
        && g.rmse_w.mean < rnd.rmse_w.mean
        && *secs < 7200.0;
    report(
        7,
        "IO-HMM ordering",
        ok,
        &format!(
            "entropy gibbs {:.2}±{:.2}, mismatch {:.2}, random {:.2}±{:.2}; rmse_A {:.4} vs {:.4}; rmse_w {:.3} vs {:.3}; {secs:.0} s",
            g.entropy.mean, g.entropy.half_width, mm.entropy.mean, rnd.entropy.mean, rnd.entropy.half_width,
            a(&g), a(&rnd), g.rmse_w.mean, rnd.rmse_w.mean
        ),
    );
    assert!(ok);
}

#[test]
fn iohmm_avoids_large_inputs() {
    let (r, _) = iohmm_runs();
    let mut n = 0u64;
    let mut big = 0u64;
    for rep in &r.reps {
        let run = rep.run(Strategy::InfomaxGibbs).unwrap();
        for idx in run.strategy_selections() {
            n += 1;
            big += (rep.candidates.input(idx)[0].abs() > 3.0 + 1e-9) as u64;
        }
    }
    let frac = big as f64 / n as f64;
    // exact 95% Clopper-Pearson upper bound
    let upper = if big == n {
        1.0
    } else {
        let b = statrs::distribution::Beta::new(big as f64 + 1.0, (n - big) as f64).unwrap();
        statrs::distribution::ContinuousCDF::inverse_cdf(&b, 0.975)
    };
    let ok = frac < 0.10 && upper < 0.40;
    report(
        8,
        "IO-HMM avoids |x| > 3",
        ok,
        &format!("{big}/{n} = {frac:.3}, 95% upper bound {upper:.3} vs uniform 0.40"),
    );
    assert!(ok);
}

#[test]
fn parallel_chains_agree() {
    let (single, _) = iohmm_runs();
    let mut cfg = preset("iohmm-chains").unwrap();
    cfg.strategies = vec![Strategy::InfomaxGibbs];
    let chained = run_replicated(&cfg, 5, &opts()).unwrap();
    let a = finals(single, Strategy::InfomaxGibbs);
    let b = finals(&chained, Strategy::InfomaxGibbs);
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (name, f) in [
        (
            "entropy",
            (|m: &MetricRow| m.entropy) as fn(&MetricRow) -> f64,
        ),
        ("rmse_w", |m: &MetricRow| m.rmse_w),
        ("rmse_A", |m: &MetricRow| m.rmse_a.unwrap()),
    ] {
        let (x, y) = (col(&a, f), col(&b, f));
        let z = (mean(&x) - mean(&y)).abs() / (se(&x).powi(2) + se(&y).powi(2)).sqrt();
        worst = worst.max(z);
        parts.push(format!(
            "{name} {:.3} vs {:.3} (z={z:.2})",
            mean(&x),
            mean(&y)
        ));
    }
    // informational timing of one refit
    let mut tcfg = preset("iohmm-chains").unwrap();
    tcfg.chains = 1;
    let log = simulate_random_log(&tcfg, 200, 11).unwrap();
    let t = chain_timing(&tcfg, &log, &[1, 5], 1, Execution::Auto).unwrap();
    let ok = worst < 2.0;
    report(
        9,
        "parallel chains agree with one chain",
        ok,
        &format!(
            "{}; refit speedup with 5 chains {:.2}x on {} thread(s)",
            parts.join(", "),
            t[1].speedup,
            latent_infomax::par::current_num_threads()
        ),
    );
    assert!(ok);
}

// ---------------------------------------------------------------- housing

fn housing_path() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("HOUSING_CSV") {
        return Some(PathBuf::from(p));
    }
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/california_housing.csv");
    p.exists().then_some(p)
}

#[test]
fn housing_pool() {
    let Some(path) = housing_path() else {
        report(
            10,
            "housing pool",
            false,
            "BLOCKED: no housing CSV (set HOUSING_CSV or add data/california_housing.csv)",
        );
        panic!("housing data unavailable");
    };
    let clock = Instant::now();
    let pool = housing::load_pool(&path).unwrap();
    let mut cfg = preset("housing").unwrap();
    let opts_bic = BicOptions {
        seed: cfg.seed,
        ..BicOptions::default()
    };
    let table = bic_table(&pool, &[1, 3], &opts_bic).unwrap();
    let (b1, b3) = (table[0].1.bic, table[1].1.bic);
    let reference = configure_from_reference(&mut cfg, &table[1].1);
    let r = run_pool_replicated(&cfg, &pool, &reference, 10, &opts()).unwrap();
    let g = r.final_row(Strategy::InfomaxGibbs).unwrap();
    let rnd = r.final_row(Strategy::Random).unwrap();
    let consumed_ok = r
        .reps
        .iter()
        .all(|rep| rep.runs.iter().all(|s| s.log.len() == 500));
    let secs = clock.elapsed().as_secs_f64();
    let ok = pool.len() == 5000
        && b3 < b1
        && g.t == 500
        && g.rmse_w.mean < rnd.rmse_w.mean
        && g.entropy.hi() < rnd.entropy.lo()
        && consumed_ok
        && secs < 7200.0;
    report(
        10,
        "housing pool",
        ok,
        &format!(
            "BIC K=1 {b1:.1}, K=3 {b3:.1}; rmse gibbs {:.4} vs random {:.4}; entropy {:.2}±{:.2} vs {:.2}±{:.2}; {secs:.0} s",
            g.rmse_w.mean, rnd.rmse_w.mean, g.entropy.mean, g.entropy.half_width, rnd.entropy.mean, rnd.entropy.half_width
        ),
    );
    assert!(ok);
}

// ---------------------------------------------------------------- decoding, MGLM

#[test]
fn state_decoding() {
    let cfg = preset("iohmm").unwrap();
    let mut acc = [Vec::new(), Vec::new(), Vec::new()];
    for r in 0..5 {
        let mut c = cfg.clone();
        c.seed = replication_seed(cfg.seed, r);
        let rep = run_state_decoding_eval(&c, 400, 100, Execution::Auto).unwrap();
        for (i, m) in ["truth", "infomax-gibbs", "random"].iter().enumerate() {
            acc[i].push(rep.row(m).unwrap().accuracy);
        }
    }
    let (t, g, rnd) = (mean(&acc[0]), mean(&acc[1]), mean(&acc[2]));
    let ok = g > rnd && g <= t && rnd <= t;
    report(
        11,
        "state decoding",
        ok,
        &format!("mean accuracy truth {t:.3}, infomax {g:.3}, random {rnd:.3}"),
    );
    assert!(ok);
}

#[test]
fn mglm_ordering() {
    let cfg = preset("mglm").unwrap();
    let r = run_replicated(&cfg, 5, &opts()).unwrap();
    let g = r.final_row(Strategy::InfomaxGibbs).unwrap();
    let rnd = r.final_row(Strategy::Random).unwrap();
    let ok = g.t == 1000 && g.entropy.mean < rnd.entropy.mean && g.rmse_w.mean < rnd.rmse_w.mean;
    report(
        12,
        "MGLM ordering",
        ok,
        &format!(
            "entropy {:.2} vs {:.2}, rmse_w {:.4} vs {:.4}",
            g.entropy.mean, rnd.entropy.mean, g.rmse_w.mean, rnd.rmse_w.mean
        ),
    );
    assert!(ok);
}
