use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use latent_infomax::harness::{preset, PRESETS};
use latent_infomax::iohmm::glm::to_augmented;
use latent_infomax::iohmm::IoHmmParams;
use latent_infomax::{CandidateSpec, ExperimentConfig, ExperimentLog, ModelFamily, ParamBundle};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_latent-infomax"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn help_lists_every_preset() {
    let o = run(&["--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for (name, _) in PRESETS {
        assert!(text.contains(name), "{name} missing from help");
    }
    let o = run(&["simulate", "--help"]);
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .contains("iohmm-chains"));
}

#[test]
fn simulate_writes_one_block_per_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = run(&[
        "simulate",
        "--preset",
        "mlr2d",
        "--seed",
        "7",
        "--trials",
        "15",
        "--strategies",
        "random,infomax-gibbs",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout
        .lines()
        .any(|l| l.starts_with("trial=15 strategy=infomax-gibbs entropy=")));
    let curves = csv_rows(&out.join("curves.csv"));
    for s in ["random", "infomax-gibbs"] {
        assert_eq!(curves.iter().filter(|r| r[1] == s).count(), 15);
    }
    let metrics = csv_rows(&out.join("metrics.csv"));
    assert_eq!(metrics.len(), 30);
    for f in ["config.txt", "log.csv", "histogram.csv"] {
        assert!(out.join(f).exists());
    }
}

#[test]
fn identical_seed_gives_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&[
            "simulate",
            "--preset",
            "mlr2d",
            "--seed",
            "3",
            "--trials",
            "12",
            "--quiet",
            "--out",
            p(out),
        ]);
        assert_eq!(code(&o), 0);
    }
    for f in [
        "log.csv",
        "log-infomax-vi.csv",
        "curves.csv",
        "histogram.csv",
        "config.txt",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    // everything but wall-clock time
    let strip = |path: &Path| -> Vec<Vec<String>> {
        csv_rows(path)
            .into_iter()
            .map(|mut r| {
                r.pop();
                r
            })
            .collect()
    };
    assert_eq!(strip(&a.join("metrics.csv")), strip(&b.join("metrics.csv")));
}

#[test]
fn preset_round_trips_through_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("mlr2d.txt");
    preset("mlr2d").unwrap().save(&cfg_path).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let common = ["--trials", "11", "--strategies", "infomax-gibbs", "--quiet"];
    let mut args = vec!["simulate", "--preset", "mlr2d", "--out", p(&a)];
    args.extend(common);
    assert_eq!(code(&run(&args)), 0);
    let mut args = vec!["simulate", "--config", p(&cfg_path), "--out", p(&b)];
    args.extend(common);
    assert_eq!(code(&run(&args)), 0);
    assert_eq!(
        fs::read(a.join("log.csv")).unwrap(),
        fs::read(b.join("log.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_2() {
    assert_eq!(
        code(&run(&["simulate", "--config", "/definitely/not/here.txt"])),
        2
    );
    assert_eq!(code(&run(&["simulate", "--preset", "no-such-preset"])), 2);
    assert_eq!(
        code(&run(&[
            "simulate",
            "--preset",
            "mlr2d",
            "--strategies",
            "bogus"
        ])),
        2
    );
    assert_eq!(code(&run(&["fisher-scan", "--sigma-sq", "0.1,zero"])), 2);
    assert_eq!(code(&run(&["fisher-scan", "--sigma-sq", "0.1,-1"])), 2);
    assert_eq!(code(&run(&["fisher-scan", "--preset", "mlr10d"])), 2);
    assert_eq!(
        code(&run(&[
            "simulate",
            "--preset",
            "mglm",
            "--strategies",
            "infomax-vi",
            "--trials",
            "12"
        ])),
        2
    );
}

#[test]
fn fisher_scan_default_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "fisher-scan",
        "--sigma-sq",
        "0.1,0.5,1.0",
        "--mc-samples",
        "500",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&dir.path().join("fisher.csv"));
    assert_eq!(rows.len(), 108);
    let levels: std::collections::BTreeSet<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(levels.len(), 3);
}

#[test]
fn pool_beyond_its_size_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pool.csv");
    let mut text = String::from("y,x0,x1\n");
    for i in 0..10 {
        let x = i as f64 / 10.0;
        text.push_str(&format!("{},{x},1\n", 2.0 * x + 0.3 * (i % 2) as f64));
    }
    fs::write(&data, text).unwrap();
    let mut cfg = ExperimentConfig::new(ModelFamily::Mlr, 2, 2);
    cfg.trials = 20;
    cfg.samples = 20;
    cfg.burn_in = 5;
    cfg.candidates = CandidateSpec::PoolFile { path: data.clone() };
    let cfg_path = dir.path().join("pool.txt");
    cfg.save(&cfg_path).unwrap();
    let o = run(&[
        "pool",
        "--config",
        p(&cfg_path),
        "--k-max",
        "2",
        "--quiet",
        "--out",
        p(&dir.path().join("o")),
    ]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("pool exhausted"));

    let o = run(&[
        "pool",
        "--config",
        p(&cfg_path),
        "--trials",
        "10",
        "--k-max",
        "2",
        "--quiet",
        "--strategies",
        "random",
        "--out",
        p(&dir.path().join("ok")),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_rows(&dir.path().join("ok/bic.csv")).len(), 2);
    assert_eq!(
        ExperimentLog::load_csv(&dir.path().join("ok/log.csv"))
            .unwrap()
            .len(),
        10
    );
}

#[test]
fn decode_single_state_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ModelFamily::IoHmm, 1, 2);
    cfg.samples = 20;
    cfg.burn_in = 5;
    cfg.bias = true;
    cfg.candidates = CandidateSpec::LineGrid {
        lo: -5.0,
        hi: 5.0,
        step: 0.5,
    };
    cfg.truth = Some(ParamBundle::IoHmm(
        IoHmmParams::new(vec![to_augmented(2.0, 0.5)], vec![vec![1.0]], vec![1.0]).unwrap(),
    ));
    let cfg_path = dir.path().join("k1.txt");
    cfg.save(&cfg_path).unwrap();
    let out = dir.path().join("d");
    let o = run(&[
        "decode",
        "--config",
        p(&cfg_path),
        "--train",
        "12",
        "--eval",
        "20",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("accuracy.csv"));
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[3] == "1"));
    assert!(out.join("decoded-truth.csv").exists());
}

#[test]
fn chains_bench_table() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = preset("iohmm-chains").unwrap();
    cfg.samples = 50;
    cfg.burn_in = 5;
    let cfg_path = dir.path().join("c.txt");
    cfg.save(&cfg_path).unwrap();
    let o = run(&[
        "chains-bench",
        "--config",
        p(&cfg_path),
        "--chains",
        "5",
        "--trials",
        "40",
        "--repeats",
        "1",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("chains.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][0].as_str(), rows[1][0].as_str()), ("1", "5"));
    assert_eq!(rows[0][3], "1");
    let o = run(&["chains-bench", "--config", p(&cfg_path), "--chains", "3"]);
    assert_eq!(code(&o), 2);
}
