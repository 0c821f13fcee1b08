//! Experiment configuration and its flat `key = value` text format.
//!
//! One setting per line, `#` starts a comment. Vectors are whitespace
//! separated; matrices separate rows with `;`. Recognised keys:
//!
//! | key | meaning |
//! |---|---|
//! | `name` | preset or experiment name |
//! | `family` | `mlr`, `iohmm` or `mglm` |
//! | `K`, `D` | latent states, input dimension (including any bias column) |
//! | `T` | trial budget |
//! | `M`, `burn_in`, `chains` | retained samples, burn-in sweeps per chain, chain count |
//! | `w0`, `sigma0_sq` | Gaussian weight prior `N(w0, sigma0_sq·I)` |
//! | `alpha` | K×K Dirichlet prior on transition rows |
//! | `alpha_pi` | Dirichlet prior on mixing / initial-state weights |
//! | `sigma_sq` | MLR observation noise variance (known) |
//! | `strategy` | `random`, `infomax-gibbs`, `infomax-vi`, `infomax-glm-mismatch` |
//! | `strategies` | comma-separated list for multi-strategy runs |
//! | `replications` | replication count |
//! | `candidates` | `circle:<step>`, `sphere:<n>:<dim>:<seed>`, `line:<lo>:<hi>:<step>`, `pool:<path>` |
//! | `bias` | append a constant-1 input column (`true`/`false`) |
//! | `metric_cadence` | evaluate metrics every this many trials (and at `T`) |
//! | `warmup` | leading random trials for infomax strategies |
//! | `refit_every` | refit the selection posterior every this many trials |
//! | `warm_start` | continue each refit from the previous sampler state |
//! | `restarts`, `pilot_sweeps` | Gibbs starting points compared by log posterior, sweeps run from each first |
//! | `seed` | base seed |
//! | `pool_candidates` | random subsample of unconsumed pool rows scored per trial (0 = all) |
//! | `vi_max_iters`, `vi_tol` | VI iteration cap and relative tolerance |
//! | `truth.weights`, `truth.pi`, `truth.A`, `truth.pi0` | generative parameters |

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::data::CandidateSpec;
use crate::error::{Error, Result};
use crate::infomax::ParamBundle;
use crate::iohmm::{IoHmmParams, MglmParams};
use crate::mlr::MlrParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelFamily {
    Mlr,
    IoHmm,
    Mglm,
}

impl ModelFamily {
    pub fn binary_output(self) -> bool {
        !matches!(self, ModelFamily::Mlr)
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelFamily::Mlr => "mlr",
            ModelFamily::IoHmm => "iohmm",
            ModelFamily::Mglm => "mglm",
        })
    }
}

impl FromStr for ModelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mlr" => Ok(ModelFamily::Mlr),
            "iohmm" => Ok(ModelFamily::IoHmm),
            "mglm" => Ok(ModelFamily::Mglm),
            other => Err(Error::config(format!("unknown model family '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    Random,
    InfomaxGibbs,
    InfomaxVi,
    InfomaxGlmMismatch,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Random,
        Strategy::InfomaxGibbs,
        Strategy::InfomaxVi,
        Strategy::InfomaxGlmMismatch,
    ];

    pub fn is_infomax(self) -> bool {
        self != Strategy::Random
    }

    pub fn parse_list(s: &str) -> Result<Vec<Strategy>> {
        let v: Result<Vec<Strategy>> = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.parse())
            .collect();
        let v = v?;
        if v.is_empty() {
            return Err(Error::config("empty strategy list"));
        }
        Ok(v)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Random => "random",
            Strategy::InfomaxGibbs => "infomax-gibbs",
            Strategy::InfomaxVi => "infomax-vi",
            Strategy::InfomaxGlmMismatch => "infomax-glm-mismatch",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "random" => Ok(Strategy::Random),
            "infomax-gibbs" => Ok(Strategy::InfomaxGibbs),
            "infomax-vi" => Ok(Strategy::InfomaxVi),
            "infomax-glm-mismatch" => Ok(Strategy::InfomaxGlmMismatch),
            other => Err(Error::config(format!("unknown strategy '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub family: ModelFamily,
    pub k: usize,
    pub d: usize,
    pub trials: usize,
    pub samples: usize,
    pub burn_in: usize,
    pub chains: usize,
    pub w0: Vec<f64>,
    pub sigma0_sq: f64,
    pub alpha: Vec<Vec<f64>>,
    pub alpha_pi: Vec<f64>,
    pub sigma_sq: f64,
    pub strategy: Strategy,
    pub strategies: Vec<Strategy>,
    pub replications: usize,
    pub candidates: CandidateSpec,
    pub bias: bool,
    pub metric_cadence: usize,
    pub warmup: usize,
    pub refit_every: usize,
    /// Start each refit from the previous refit's final state instead of a
    /// fresh initialization.
    pub warm_start: bool,
    /// Fresh Gibbs starting points; the chain continues from whichever
    /// (including a warm state) has the highest log posterior after
    /// `pilot_sweeps` sweeps.
    pub restarts: usize,
    pub pilot_sweeps: usize,
    pub seed: u64,
    pub pool_candidates: usize,
    pub vi_max_iters: usize,
    pub vi_tol: f64,
    pub truth: Option<ParamBundle>,
}

impl ExperimentConfig {
    /// Defaults for a family with `k` states in `d` dimensions.
    pub fn new(family: ModelFamily, k: usize, d: usize) -> Self {
        ExperimentConfig {
            name: "custom".into(),
            family,
            k,
            d,
            trials: 100,
            samples: 500,
            burn_in: 100,
            chains: 1,
            w0: vec![0.0; d],
            sigma0_sq: 10.0,
            alpha: vec![vec![1.0; k]; k],
            alpha_pi: vec![1.0; k],
            sigma_sq: 0.1,
            strategy: Strategy::InfomaxGibbs,
            strategies: vec![Strategy::InfomaxGibbs, Strategy::Random],
            replications: 1,
            candidates: CandidateSpec::CircleGrid { step_deg: 10.0 },
            bias: false,
            metric_cadence: 1,
            warmup: 10,
            refit_every: 1,
            warm_start: false,
            restarts: 4,
            pilot_sweeps: 25,
            seed: 0,
            pool_candidates: 0,
            vi_max_iters: 500,
            vi_tol: 1e-6,
            truth: None,
        }
    }

    pub fn with_strategy(&self, s: Strategy) -> Self {
        let mut c = self.clone();
        c.strategy = s;
        c
    }

    pub fn validate(&self) -> Result<()> {
        let e = |m: &str| Err(Error::config(m.to_string()));
        if self.k < 1 {
            return e("K must be at least 1");
        }
        if self.d < 1 {
            return e("D must be at least 1");
        }
        if self.samples < 1 {
            return e("M must be at least 1");
        }
        if self.chains < 1 {
            return e("chain count must be at least 1");
        }
        if self.samples % self.chains != 0 {
            return e("M must be divisible by the chain count");
        }
        if self.w0.len() != self.d {
            return e("w0 length must equal D");
        }
        if !(self.sigma0_sq > 0.0) {
            return e("sigma0_sq must be positive");
        }
        if !(self.sigma_sq > 0.0) {
            return e("sigma_sq must be positive");
        }
        if self.alpha.len() != self.k || self.alpha.iter().any(|r| r.len() != self.k) {
            return e("alpha must be a K×K matrix");
        }
        if self.alpha_pi.len() != self.k {
            return e("alpha_pi length must equal K");
        }
        if self
            .alpha
            .iter()
            .flatten()
            .chain(&self.alpha_pi)
            .any(|a| !(*a > 0.0))
        {
            return e("Dirichlet concentrations must be positive");
        }
        if self.metric_cadence < 1 || self.refit_every < 1 {
            return e("metric_cadence and refit_every must be at least 1");
        }
        if self.replications < 1 {
            return e("replications must be at least 1");
        }
        if self.strategies.is_empty() {
            return e("strategy list is empty");
        }
        if !(self.vi_tol >= 0.0) {
            return e("vi_tol must be non-negative");
        }
        if let Some(t) = &self.truth {
            t.check_shape(self.k, self.d)
                .map_err(|err| Error::config(format!("truth: {err}")))?;
            if t.family() != Some(self.family) {
                return e("truth parameters do not match the model family");
            }
        }
        Ok(())
    }

    /// Stable 64-bit FNV-1a hash of the serialized configuration, excluding
    /// the seed so replications share a hash.
    pub fn hash(&self) -> u64 {
        let mut c = self.clone();
        c.seed = 0;
        fnv1a(c.to_text().as_bytes())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("name", self.name.clone());
        kv("family", self.family.to_string());
        kv("K", self.k.to_string());
        kv("D", self.d.to_string());
        kv("T", self.trials.to_string());
        kv("M", self.samples.to_string());
        kv("burn_in", self.burn_in.to_string());
        kv("chains", self.chains.to_string());
        kv("w0", fmt_vec(&self.w0));
        kv("sigma0_sq", self.sigma0_sq.to_string());
        kv("alpha", fmt_mat(&self.alpha));
        kv("alpha_pi", fmt_vec(&self.alpha_pi));
        kv("sigma_sq", self.sigma_sq.to_string());
        kv("strategy", self.strategy.to_string());
        kv(
            "strategies",
            self.strategies
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("replications", self.replications.to_string());
        kv("candidates", self.candidates.to_string());
        kv("bias", self.bias.to_string());
        kv("metric_cadence", self.metric_cadence.to_string());
        kv("warmup", self.warmup.to_string());
        kv("refit_every", self.refit_every.to_string());
        kv("warm_start", self.warm_start.to_string());
        kv("restarts", self.restarts.to_string());
        kv("pilot_sweeps", self.pilot_sweeps.to_string());
        kv("seed", self.seed.to_string());
        kv("pool_candidates", self.pool_candidates.to_string());
        kv("vi_max_iters", self.vi_max_iters.to_string());
        kv("vi_tol", self.vi_tol.to_string());
        if let Some(t) = &self.truth {
            match t {
                ParamBundle::Mlr(p) => {
                    kv("truth.weights", fmt_mat(&p.weights));
                    kv("truth.pi", fmt_vec(&p.pi));
                }
                ParamBundle::IoHmm(p) => {
                    kv("truth.weights", fmt_mat(&p.weights));
                    kv("truth.A", fmt_mat(&p.a));
                    kv("truth.pi0", fmt_vec(&p.pi0));
                }
                ParamBundle::Mglm(p) => {
                    kv("truth.weights", fmt_mat(&p.weights));
                    kv("truth.pi", fmt_vec(&p.pi));
                }
                ParamBundle::Glm(w) => kv("truth.weights", fmt_vec(w)),
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected key = value", i + 1)))?;
            let k = k.trim().to_string();
            if map
                .insert(k.clone(), (i + 1, v.trim().to_string()))
                .is_some()
            {
                return Err(Error::config(format!(
                    "line {}: duplicate key '{k}'",
                    i + 1
                )));
            }
        }
        let mut take = |k: &str| map.remove(k).map(|(_, v)| v);
        let family: ModelFamily = take("family")
            .ok_or_else(|| Error::config("missing key 'family'"))?
            .parse()?;
        let k: usize = parse_num(
            &take("K").ok_or_else(|| Error::config("missing key 'K'"))?,
            "K",
        )?;
        let d: usize = parse_num(
            &take("D").ok_or_else(|| Error::config("missing key 'D'"))?,
            "D",
        )?;
        let mut c = ExperimentConfig::new(family, k, d);
        if let Some(v) = take("name") {
            c.name = v;
        }
        if let Some(v) = take("T") {
            c.trials = parse_num(&v, "T")?;
        }
        if let Some(v) = take("M") {
            c.samples = parse_num(&v, "M")?;
        }
        if let Some(v) = take("burn_in") {
            c.burn_in = parse_num(&v, "burn_in")?;
        }
        if let Some(v) = take("chains") {
            c.chains = parse_num(&v, "chains")?;
        }
        if let Some(v) = take("w0") {
            c.w0 = parse_vec(&v, "w0")?;
        }
        if let Some(v) = take("sigma0_sq") {
            c.sigma0_sq = parse_num(&v, "sigma0_sq")?;
        }
        if let Some(v) = take("alpha") {
            c.alpha = parse_mat(&v, "alpha")?;
        }
        if let Some(v) = take("alpha_pi") {
            c.alpha_pi = parse_vec(&v, "alpha_pi")?;
        }
        if let Some(v) = take("sigma_sq") {
            c.sigma_sq = parse_num(&v, "sigma_sq")?;
        }
        if let Some(v) = take("strategy") {
            c.strategy = v.parse()?;
        }
        if let Some(v) = take("strategies") {
            c.strategies = Strategy::parse_list(&v)?;
        }
        if let Some(v) = take("replications") {
            c.replications = parse_num(&v, "replications")?;
        }
        if let Some(v) = take("candidates") {
            c.candidates = v.parse()?;
        }
        if let Some(v) = take("bias") {
            c.bias = match v.as_str() {
                "true" => true,
                "false" => false,
                _ => return Err(Error::config("bias must be true or false")),
            };
        }
        if let Some(v) = take("metric_cadence") {
            c.metric_cadence = parse_num(&v, "metric_cadence")?;
        }
        if let Some(v) = take("warmup") {
            c.warmup = parse_num(&v, "warmup")?;
        }
        if let Some(v) = take("refit_every") {
            c.refit_every = parse_num(&v, "refit_every")?;
        }
        if let Some(v) = take("warm_start") {
            c.warm_start = parse_num(&v, "warm_start")?;
        }
        if let Some(v) = take("restarts") {
            c.restarts = parse_num(&v, "restarts")?;
        }
        if let Some(v) = take("pilot_sweeps") {
            c.pilot_sweeps = parse_num(&v, "pilot_sweeps")?;
        }
        if let Some(v) = take("seed") {
            c.seed = parse_num(&v, "seed")?;
        }
        if let Some(v) = take("pool_candidates") {
            c.pool_candidates = parse_num(&v, "pool_candidates")?;
        }
        if let Some(v) = take("vi_max_iters") {
            c.vi_max_iters = parse_num(&v, "vi_max_iters")?;
        }
        if let Some(v) = take("vi_tol") {
            c.vi_tol = parse_num(&v, "vi_tol")?;
        }
        let tw = take("truth.weights");
        let tpi = take("truth.pi");
        let ta = take("truth.A");
        let tpi0 = take("truth.pi0");
        if let Some(w) = tw {
            let weights = parse_mat(&w, "truth.weights")?;
            c.truth = Some(match family {
                ModelFamily::Mlr => ParamBundle::Mlr(MlrParams {
                    weights,
                    pi: parse_vec(
                        &tpi.ok_or_else(|| Error::config("missing truth.pi"))?,
                        "truth.pi",
                    )?,
                    sigma_sq: c.sigma_sq,
                }),
                ModelFamily::Mglm => ParamBundle::Mglm(MglmParams {
                    weights,
                    pi: parse_vec(
                        &tpi.ok_or_else(|| Error::config("missing truth.pi"))?,
                        "truth.pi",
                    )?,
                }),
                ModelFamily::IoHmm => ParamBundle::IoHmm(IoHmmParams {
                    weights,
                    a: parse_mat(
                        &ta.ok_or_else(|| Error::config("missing truth.A"))?,
                        "truth.A",
                    )?,
                    pi0: parse_vec(
                        &tpi0.ok_or_else(|| Error::config("missing truth.pi0"))?,
                        "truth.pi0",
                    )?,
                }),
            });
        }
        if let Some((key, _)) = map.keys().next().map(|k| (k.clone(), ())) {
            return Err(Error::config(format!("unknown key '{key}'")));
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn parse_num<T: FromStr>(v: &str, key: &str) -> Result<T> {
    v.trim()
        .parse::<T>()
        .map_err(|_| Error::config(format!("bad value for '{key}': '{v}'")))
}

pub fn parse_vec(v: &str, key: &str) -> Result<Vec<f64>> {
    let out: Result<Vec<f64>> = v.split_whitespace().map(|p| parse_num(p, key)).collect();
    let out = out?;
    if out.is_empty() {
        return Err(Error::config(format!("empty vector for '{key}'")));
    }
    Ok(out)
}

fn parse_mat(v: &str, key: &str) -> Result<Vec<Vec<f64>>> {
    v.split(';').map(|row| parse_vec(row, key)).collect()
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn fmt_mat(m: &[Vec<f64>]) -> String {
    m.iter().map(|r| fmt_vec(r)).collect::<Vec<_>>().join("; ")
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
