//! Sample-based mutual information between the parameters and the next
//! output, and the resulting input-selection rule.
//!
//! For posterior draws `θ¹..θᴹ` and a candidate `x`,
//! `I(y; θ | x) ≈ (1/M) Σ_j KL(p(y|θʲ,x) ‖ p̄(y|x))` with `p̄` the mean of
//! the per-sample predictives. Binary outputs use the exact two-term form.
//! Continuous outputs (MLR) are integrated with the trapezoid rule on a
//! uniform y-grid.

use crate::data::{CandidateSet, ExperimentLog};
use crate::error::{Error, Result};
use crate::iohmm::glm::sigmoid;
use crate::iohmm::hmm::{emission_loglik, predict_next_state};
use crate::linalg::dot;
use crate::mlr::MixturePredictive;
use crate::par::{self, Execution};

use super::{ParamBundle, ParamSampleSet};

/// Maximum number of grid points for continuous outputs.
pub const GRID_MAX_POINTS: usize = 2048;
/// The grid extends this many standard deviations past the extreme means.
pub const GRID_MARGIN_SD: f64 = 6.0;
/// Each mixture component is evaluated on this many standard deviations
/// either side of its mean; beyond that its density is below 1e-14 of peak.
pub const COMPONENT_WINDOW_SD: f64 = 8.0;
/// Target grid spacing in units of the smallest standard deviation.
pub const POINTS_PER_SD: f64 = 4.0;

fn xlnx(v: f64) -> f64 {
    if v > 0.0 {
        v * v.ln()
    } else {
        0.0
    }
}

/// Exact MI for Bernoulli predictives with success probabilities `p`.
pub fn mi_bernoulli(p: &[f64]) -> f64 {
    if p.windows(2).all(|w| w[0] == w[1]) {
        return 0.0;
    }
    let m = p.len() as f64;
    let mean = p.iter().sum::<f64>() / m;
    let neg_h: f64 = p.iter().map(|&q| xlnx(q) + xlnx(1.0 - q)).sum::<f64>() / m;
    neg_h - (xlnx(mean) + xlnx(1.0 - mean))
}

/// MI for per-sample probability mass functions over a shared finite
/// support (`pmfs[j][i]` = probability of outcome `i` under sample `j`).
pub fn mi_discrete(pmfs: &[Vec<f64>]) -> f64 {
    let m = pmfs.len() as f64;
    let n = pmfs.first().map(|p| p.len()).unwrap_or(0);
    let mut mean = vec![0.0; n];
    let mut neg_h = 0.0;
    for p in pmfs {
        for (i, v) in p.iter().enumerate() {
            mean[i] += v / m;
            neg_h += xlnx(*v) / m;
        }
    }
    neg_h - mean.iter().map(|v| xlnx(*v)).sum::<f64>()
}

fn identical_mixtures(set: &[MixturePredictive]) -> bool {
    set.windows(2).all(|w| w[0] == w[1])
}

struct Grid {
    y0: f64,
    h: f64,
    n: usize,
}

impl Grid {
    fn for_mixtures(set: &[MixturePredictive], max_points: usize, adaptive: bool) -> Result<Grid> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut s_min = f64::INFINITY;
        let mut s_max: f64 = 0.0;
        for mix in set {
            let s = mix.sigma_sq.sqrt();
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::numerical(
                    "predictive noise variance must be positive",
                ));
            }
            s_min = s_min.min(s);
            s_max = s_max.max(s);
            for &mu in &mix.means {
                if !mu.is_finite() {
                    return Err(Error::numerical("non-finite predictive mean"));
                }
                lo = lo.min(mu);
                hi = hi.max(mu);
            }
        }
        let lo = lo - GRID_MARGIN_SD * s_max;
        let hi = hi + GRID_MARGIN_SD * s_max;
        let n = if adaptive {
            let want = ((hi - lo) / (s_min / POINTS_PER_SD)).ceil() as usize + 1;
            want.clamp(3, max_points)
        } else {
            max_points
        };
        Ok(Grid {
            y0: lo,
            h: (hi - lo) / (n - 1) as f64,
            n,
        })
    }

    fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.n {
            0.5 * self.h
        } else {
            self.h
        }
    }
}

/// Add `c · N(y; mu, σ²)` to `buf` on grid points within the component
/// window. Successive Gaussian values are generated by the recurrence
/// `v_{i+1} = v_i r_i`, `r_{i+1} = r_i q` with `q = exp(−h²/σ²)`.
fn add_component(buf: &mut [f64], g: &Grid, mu: f64, c: f64, sigma: f64) -> (usize, usize) {
    let w = COMPONENT_WINDOW_SD * sigma;
    let s = ((mu - w - g.y0) / g.h).ceil().max(0.0) as usize;
    let e = (((mu + w - g.y0) / g.h).floor()).min((g.n - 1) as f64);
    if e < s as f64 || c <= 0.0 {
        return (s, s);
    }
    let e = e as usize;
    let var = sigma * sigma;
    let d = g.y0 + s as f64 * g.h - mu;
    let mut v = c / ((2.0 * std::f64::consts::PI).sqrt() * sigma) * (-d * d / (2.0 * var)).exp();
    let mut r = (-(2.0 * d * g.h + g.h * g.h) / (2.0 * var)).exp();
    let q = (-g.h * g.h / var).exp();
    for b in &mut buf[s..=e] {
        *b += v;
        v *= r;
        r *= q;
    }
    (s, e + 1)
}

/// MI for mixture-of-Gaussian predictives by trapezoid quadrature.
///
/// The grid spacing targets an eighth of the smallest standard deviation,
/// capped at [`GRID_MAX_POINTS`] points.
pub fn mi_mixture(set: &[MixturePredictive]) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::invalid("no predictive samples"));
    }
    if identical_mixtures(set) {
        return Ok(0.0);
    }
    let g = Grid::for_mixtures(set, GRID_MAX_POINTS, true)?;
    let m = set.len() as f64;
    let mut pbar = vec![0.0; g.n];
    let mut buf = vec![0.0; g.n];
    let mut neg_h = 0.0;
    let mut spans: Vec<(usize, usize)> = Vec::new();
    for mix in set {
        let sigma = mix.sigma_sq.sqrt();
        spans.clear();
        for (mu, c) in mix.means.iter().zip(&mix.weights) {
            let (s, e) = add_component(&mut buf, &g, *mu, *c, sigma);
            if e > s {
                spans.push((s, e));
            }
        }
        // visit the union of the component windows only
        spans.sort_unstable();
        let mut i = 0;
        while i < spans.len() {
            let (lo, mut hi) = spans[i];
            i += 1;
            while i < spans.len() && spans[i].0 <= hi {
                hi = hi.max(spans[i].1);
                i += 1;
            }
            // trapezoid end weights are half the interior ones
            let mut acc = -0.5
                * (if lo == 0 { xlnx(buf[0]) } else { 0.0 }
                    + if hi == g.n { xlnx(buf[g.n - 1]) } else { 0.0 });
            for (b, p) in buf[lo..hi].iter_mut().zip(&mut pbar[lo..hi]) {
                acc += xlnx(*b);
                *p += *b;
                *b = 0.0;
            }
            neg_h += g.h * acc;
        }
    }
    finish(&g, pbar, neg_h / m, m)
}

fn finish(g: &Grid, mut pbar: Vec<f64>, neg_h: f64, m: f64) -> Result<f64> {
    let mut mass = 0.0;
    let mut cross = 0.0;
    for (i, p) in pbar.iter_mut().enumerate() {
        *p /= m;
        mass += g.weight(i) * *p;
        cross += g.weight(i) * xlnx(*p);
    }
    if !(mass > 0.5 && mass.is_finite()) {
        return Err(Error::numerical(format!(
            "predictive mass {mass} on the quadrature grid; grid is mis-specified"
        )));
    }
    Ok(neg_h - cross)
}

/// Reference quadrature on a fixed grid of `n` points with every density
/// evaluated directly. Slow; used to validate [`mi_mixture`].
pub fn mi_mixture_fixed_grid(set: &[MixturePredictive], n: usize) -> Result<f64> {
    if set.is_empty() || n < 3 {
        return Err(Error::invalid("need samples and at least 3 grid points"));
    }
    if identical_mixtures(set) {
        return Ok(0.0);
    }
    let g = Grid::for_mixtures(set, n, false)?;
    let m = set.len() as f64;
    let mut pbar = vec![0.0; g.n];
    let mut neg_h = 0.0;
    for mix in set {
        for (i, p) in pbar.iter_mut().enumerate() {
            let v = mix.pdf(g.y0 + i as f64 * g.h);
            neg_h += g.weight(i) * xlnx(v);
            *p += v;
        }
    }
    finish(&g, pbar, neg_h / m, m)
}

/// Per-sample predictive distributions at one input.
#[derive(Clone, Debug, PartialEq)]
pub enum PredictiveSet {
    Bernoulli(Vec<f64>),
    Mixture(Vec<MixturePredictive>),
}

impl PredictiveSet {
    pub fn len(&self) -> usize {
        match self {
            PredictiveSet::Bernoulli(p) => p.len(),
            PredictiveSet::Mixture(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Consensus `p(y = 1 | x)` for binary outputs.
    pub fn consensus_probability(&self) -> Option<f64> {
        match self {
            PredictiveSet::Bernoulli(p) => Some(p.iter().sum::<f64>() / p.len() as f64),
            PredictiveSet::Mixture(_) => None,
        }
    }

    /// Consensus density (continuous) or mass (binary) at `y`.
    pub fn consensus_density(&self, y: f64) -> f64 {
        match self {
            PredictiveSet::Bernoulli(p) => {
                let q = p.iter().sum::<f64>() / p.len() as f64;
                if y == 1.0 {
                    q
                } else if y == 0.0 {
                    1.0 - q
                } else {
                    0.0
                }
            }
            PredictiveSet::Mixture(m) => m.iter().map(|d| d.pdf(y)).sum::<f64>() / m.len() as f64,
        }
    }

    pub fn mutual_information(&self) -> Result<f64> {
        match self {
            PredictiveSet::Bernoulli(p) => Ok(mi_bernoulli(p)),
            PredictiveSet::Mixture(m) => mi_mixture(m),
        }
    }
}

enum Kind {
    Gaussian {
        weights: Vec<Vec<Vec<f64>>>,
        pi: Vec<Vec<f64>>,
        sigma_sq: Vec<f64>,
    },
    /// `p_j(y=1|x) = Σ_k q_jk σ(w_jk · x)`.
    Bernoulli {
        weights: Vec<Vec<Vec<f64>>>,
        q: Vec<Vec<f64>>,
    },
}

/// Posterior predictive machinery for one trial: the state distributions
/// that depend on the history are computed once here, then reused for every
/// candidate.
pub struct PredictiveModel {
    kind: Kind,
    dim: usize,
}

impl PredictiveModel {
    /// For IO-HMM samples the next-state distribution of each sample is
    /// obtained by filtering `log`; with no log (or an empty one) it is the
    /// initial-state distribution.
    pub fn new(samples: &ParamSampleSet, log: Option<&ExperimentLog>) -> Result<Self> {
        Self::with_execution(samples, log, Execution::Auto)
    }

    pub fn with_execution(
        samples: &ParamSampleSet,
        log: Option<&ExperimentLog>,
        exec: Execution,
    ) -> Result<Self> {
        let dim = samples.dim();
        if let Some(l) = log {
            if !l.is_empty() && l.dim() != dim {
                return Err(Error::invalid("log dimension does not match the samples"));
            }
        }
        let weights: Vec<Vec<Vec<f64>>> = samples.iter().map(|s| s.weights().to_vec()).collect();
        let kind = match samples.first() {
            ParamBundle::Mlr(_) => Kind::Gaussian {
                weights,
                pi: samples
                    .iter()
                    .map(|s| s.mixing().unwrap().to_vec())
                    .collect(),
                sigma_sq: samples
                    .iter()
                    .map(|s| match s {
                        ParamBundle::Mlr(p) => p.sigma_sq,
                        _ => unreachable!(),
                    })
                    .collect(),
            },
            ParamBundle::Mglm(_) => Kind::Bernoulli {
                weights,
                q: samples
                    .iter()
                    .map(|s| s.mixing().unwrap().to_vec())
                    .collect(),
            },
            ParamBundle::Glm(_) => Kind::Bernoulli {
                weights,
                q: vec![vec![1.0]; samples.len()],
            },
            ParamBundle::IoHmm(_) => {
                let q = par::map_slice(samples.samples(), exec, |s| {
                    let ParamBundle::IoHmm(p) = s else {
                        unreachable!()
                    };
                    match log {
                        Some(l) if !l.is_empty() => {
                            predict_next_state(&emission_loglik(l, &p.weights), &p.pi0, &p.a)
                        }
                        _ => p.pi0.clone(),
                    }
                });
                Kind::Bernoulli { weights, q }
            }
        };
        Ok(PredictiveModel { kind, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn predictive_set(&self, x: &[f64]) -> PredictiveSet {
        match &self.kind {
            Kind::Gaussian {
                weights,
                pi,
                sigma_sq,
            } => PredictiveSet::Mixture(
                weights
                    .iter()
                    .zip(pi)
                    .zip(sigma_sq)
                    .map(|((w, p), s)| MixturePredictive {
                        means: w.iter().map(|wk| dot(x, wk)).collect(),
                        weights: p.clone(),
                        sigma_sq: *s,
                    })
                    .collect(),
            ),
            Kind::Bernoulli { weights, q } => PredictiveSet::Bernoulli(
                weights
                    .iter()
                    .zip(q)
                    .map(|(w, qj)| {
                        let p: f64 = w
                            .iter()
                            .zip(qj)
                            .map(|(wk, qk)| qk * sigmoid(dot(x, wk)))
                            .sum();
                        p.clamp(0.0, 1.0)
                    })
                    .collect(),
            ),
        }
    }

    pub fn mutual_information(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!(
                "input has dimension {}, samples have {}",
                x.len(),
                self.dim
            )));
        }
        self.predictive_set(x).mutual_information()
    }
}

/// MI at a single input.
pub fn mutual_information(
    samples: &ParamSampleSet,
    x: &[f64],
    log: Option<&ExperimentLog>,
) -> Result<f64> {
    PredictiveModel::new(samples, log)?.mutual_information(x)
}

/// Outcome of one selection: the chosen index and the MI of every candidate
/// (NaN where a candidate was not evaluated).
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub mi: Vec<f64>,
}

impl Selection {
    pub fn max_mi(&self) -> f64 {
        self.mi[self.index]
    }
}

/// Maximize MI over the given candidate indices (lowest index wins ties).
pub fn select_among(
    model: &PredictiveModel,
    candidates: &CandidateSet,
    indices: &[usize],
    exec: Execution,
) -> Result<Selection> {
    if indices.is_empty() {
        return Err(Error::PoolExhausted);
    }
    let values = par::map_slice(indices, exec, |&i| {
        model.mutual_information(candidates.input(i))
    });
    let mut mi = vec![f64::NAN; candidates.len()];
    let mut best: Option<usize> = None;
    let mut order: Vec<(usize, f64)> = Vec::with_capacity(indices.len());
    for (&i, v) in indices.iter().zip(values) {
        let v = v?;
        mi[i] = v;
        order.push((i, v));
    }
    order.sort_by_key(|(i, _)| *i);
    for (i, v) in order {
        match best {
            Some(b) if !(v > mi[b]) => {}
            _ if v.is_nan() => {}
            _ => best = Some(i),
        }
    }
    let index =
        best.ok_or_else(|| Error::numerical("mutual information is NaN for every candidate"))?;
    Ok(Selection { index, mi })
}

/// Maximize MI over every available candidate.
pub fn select_input(
    model: &PredictiveModel,
    candidates: &CandidateSet,
    exec: Execution,
) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::invalid("empty candidate set"));
    }
    select_among(model, candidates, &candidates.available(), exec)
}
