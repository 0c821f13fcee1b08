//! Evaluation metrics: posterior entropy, label-aligned RMSE, BIC for the
//! mixture of linear regressions, and selection histograms.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{ParamBundle, ParamSampleSet};
use crate::data::{CandidateSet, CandidateSpec, ExperimentLog};
use crate::error::{Error, Result};
use crate::linalg::{dot, ln_det_spd};
use crate::mlr::MlrParams;
use crate::randkit::{ln_normal_pdf, log_sum_exp, normalize_log_weights};
use crate::rng::{labels, RngStream};

/// Jitter added to the sample covariance before taking its log-determinant.
pub const ENTROPY_JITTER: f64 = 1e-10;

/// `ln |cov(θ) + εI|` over the flattened samples, with the unbiased sample
/// covariance.
pub fn posterior_entropy(samples: &ParamSampleSet) -> Result<f64> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::invalid(
            "posterior entropy needs at least two samples",
        ));
    }
    let flat: Vec<Vec<f64>> = samples.iter().map(|s| s.flatten()).collect();
    let d = flat[0].len();
    let mut mean = vec![0.0; d];
    for v in &flat {
        for (a, b) in mean.iter_mut().zip(v) {
            *a += b;
        }
    }
    mean.iter_mut().for_each(|a| *a /= m as f64);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut c = DVector::<f64>::zeros(d);
    for v in &flat {
        for i in 0..d {
            c[i] = v[i] - mean[i];
        }
        cov.syger(1.0, &c, &c, 1.0);
    }
    cov.fill_upper_triangle_with_lower_triangle();
    cov /= (m - 1) as f64;
    for i in 0..d {
        cov[(i, i)] += ENTROPY_JITTER;
    }
    match ln_det_spd(&cov) {
        Ok(v) => Ok(v),
        Err(_) => {
            // rounding can leave a tiny negative eigenvalue; floor at the jitter
            let eig = cov.symmetric_eigen();
            Ok(eig
                .eigenvalues
                .iter()
                .map(|l| l.max(ENTROPY_JITTER).ln())
                .sum())
        }
    }
}

/// Every permutation of `0..k` in lexicographic order.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (1..k).rev().find(|&i| cur[i - 1] < cur[i]) else {
            break;
        };
        let j = (i..k).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

fn rmse(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> f64 {
    let mut s = 0.0;
    let mut n = 0usize;
    for (x, y) in a.zip(b) {
        s += (x - y) * (x - y);
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        (s / n as f64).sqrt()
    }
}

/// Per-block RMSE after label alignment.
#[derive(Clone, Debug, PartialEq)]
pub struct RmseBlocks {
    pub weights: f64,
    /// IO-HMM only.
    pub transitions: Option<f64>,
    /// Mixing weights or initial-state distribution.
    pub pi: Option<f64>,
    /// `perm[i]` is the estimate state matched to truth state `i`.
    pub perm: Vec<usize>,
}

/// RMSE of `estimate` against `truth` under the state relabelling that
/// minimizes the weight RMSE; the same relabelling is applied to every block.
/// RMSE is taken over individual entries.
pub fn aligned_rmse(estimate: &ParamBundle, truth: &ParamBundle) -> Result<RmseBlocks> {
    if estimate.tag() != truth.tag() || estimate.k() != truth.k() || estimate.dim() != truth.dim() {
        return Err(Error::invalid(
            "estimate and truth differ in family, K or D",
        ));
    }
    let flat_w = |b: &ParamBundle| b.weights().iter().flatten().copied().collect::<Vec<f64>>();
    let tw = flat_w(truth);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for perm in permutations(truth.k()) {
        let e = flat_w(&estimate.permuted(&perm));
        let r = rmse(e.into_iter(), tw.iter().copied());
        if best.as_ref().is_none_or(|(b, _)| r < *b) {
            best = Some((r, perm));
        }
    }
    let (weights, perm) = best.unwrap();
    let aligned = estimate.permuted(&perm);
    let transitions = match (aligned.transitions(), truth.transitions()) {
        (Some(a), Some(b)) => Some(rmse(
            a.iter().flatten().copied(),
            b.iter().flatten().copied(),
        )),
        _ => None,
    };
    let pi = match (aligned.mixing(), truth.mixing()) {
        (Some(a), Some(b)) => Some(rmse(a.iter().copied(), b.iter().copied())),
        _ => None,
    };
    Ok(RmseBlocks {
        weights,
        transitions,
        pi,
        perm,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BicOptions {
    pub restarts: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for BicOptions {
    fn default() -> Self {
        BicOptions {
            restarts: 5,
            tol: 1e-6,
            max_iters: 500,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BicResult {
    pub bic: f64,
    pub log_lik: f64,
    pub n_params: usize,
    pub params: MlrParams,
    pub iterations: usize,
    /// False when the best restart hit the iteration cap.
    pub converged: bool,
}

/// Free parameters of a K-state MLR with shared noise: weights, mixing and
/// the variance.
pub fn mlr_param_count(k: usize, d: usize) -> usize {
    k * d + (k - 1) + 1
}

/// Log-likelihood of `log` under `p`.
pub fn mlr_log_likelihood(log: &ExperimentLog, p: &MlrParams) -> f64 {
    let mut terms = vec![0.0; p.k()];
    log.trials()
        .iter()
        .map(|r| {
            for (j, t) in terms.iter_mut().enumerate() {
                *t = p.pi[j].ln() + ln_normal_pdf(r.y, dot(&r.x, &p.weights[j]), p.sigma_sq);
            }
            log_sum_exp(&terms)
        })
        .sum()
}

/// `n_params · ln T − 2 ℓ` at the given parameters.
pub fn bic_at(log: &ExperimentLog, p: &MlrParams) -> Result<f64> {
    if log.is_empty() {
        return Err(Error::invalid("BIC needs at least one trial"));
    }
    let k = mlr_param_count(p.k(), p.dim()) as f64;
    Ok(k * (log.len() as f64).ln() - 2.0 * mlr_log_likelihood(log, p))
}

fn em_m_step(log: &ExperimentLog, r: &[Vec<f64>], k: usize) -> Result<MlrParams> {
    let d = log.dim();
    let t = log.len() as f64;
    let mut weights = Vec::with_capacity(k);
    let mut pi = Vec::with_capacity(k);
    for j in 0..k {
        let mut a = DMatrix::<f64>::zeros(d, d);
        let mut b = DVector::<f64>::zeros(d);
        let mut n = 0.0;
        for (rec, rt) in log.trials().iter().zip(r) {
            let x = DVector::from_column_slice(&rec.x);
            a.syger(rt[j], &x, &x, 1.0);
            b.axpy(rt[j] * rec.y, &x, 1.0);
            n += rt[j];
        }
        a.fill_upper_triangle_with_lower_triangle();
        for i in 0..d {
            a[(i, i)] += 1e-10;
        }
        let w = a
            .cholesky()
            .ok_or_else(|| Error::numerical("singular weighted least-squares system"))?
            .solve(&b);
        weights.push(w.iter().copied().collect::<Vec<f64>>());
        pi.push((n / t).max(1e-300));
    }
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= s);
    let mut sse = 0.0;
    for (rec, rt) in log.trials().iter().zip(r) {
        for j in 0..k {
            let e = rec.y - dot(&rec.x, &weights[j]);
            sse += rt[j] * e * e;
        }
    }
    let sigma_sq = (sse / t).max(1e-12);
    Ok(MlrParams {
        weights,
        pi,
        sigma_sq,
    })
}

fn em_e_step(log: &ExperimentLog, p: &MlrParams, r: &mut [Vec<f64>]) -> f64 {
    let mut ll = 0.0;
    for (rec, rt) in log.trials().iter().zip(r.iter_mut()) {
        for (j, v) in rt.iter_mut().enumerate() {
            *v = p.pi[j].ln() + ln_normal_pdf(rec.y, dot(&rec.x, &p.weights[j]), p.sigma_sq);
        }
        ll += normalize_log_weights(rt);
    }
    ll
}

/// Maximum-likelihood K-state MLR by EM (best of several random restarts)
/// and its BIC.
pub fn bic(log: &ExperimentLog, k: usize, opts: &BicOptions) -> Result<BicResult> {
    if log.is_empty() {
        return Err(Error::invalid("BIC needs at least one trial"));
    }
    if k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    let root = RngStream::new(opts.seed, labels::METRICS);
    let mut best: Option<BicResult> = None;
    for rep in 0..opts.restarts.max(1) {
        let mut rng = root.fork_indexed(labels::REPLICATION, rep as u64);
        let mut r: Vec<Vec<f64>> = (0..log.len())
            .map(|_| {
                let v: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
                let s: f64 = v.iter().sum();
                v.into_iter().map(|a| a / s).collect()
            })
            .collect();
        let mut prev = f64::NEG_INFINITY;
        let mut params = em_m_step(log, &r, k)?;
        let mut converged = false;
        let mut iterations = 0;
        let mut ll = prev;
        while iterations < opts.max_iters {
            ll = em_e_step(log, &params, &mut r);
            iterations += 1;
            if (ll - prev).abs() <= opts.tol * ll.abs().max(1.0) {
                converged = true;
                break;
            }
            prev = ll;
            params = em_m_step(log, &r, k)?;
        }
        if !ll.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|b| ll > b.log_lik) {
            let n_params = mlr_param_count(k, log.dim());
            best = Some(BicResult {
                bic: n_params as f64 * (log.len() as f64).ln() - 2.0 * ll,
                log_lik: ll,
                n_params,
                params,
                iterations,
                converged,
            });
        }
    }
    best.ok_or_else(|| Error::numerical("EM produced no finite likelihood"))
}

/// Metrics for one evaluation trial.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub t: usize,
    pub strategy: String,
    pub entropy: f64,
    pub rmse_w: f64,
    pub rmse_a: Option<f64>,
    pub rmse_pi: Option<f64>,
    pub selected_idx: Option<usize>,
    pub selected_x: Vec<f64>,
    pub wall_ms: f64,
}

impl MetricRow {
    pub fn csv_header(dim: usize) -> Vec<String> {
        let mut h: Vec<String> = [
            "t",
            "strategy",
            "entropy",
            "rmse_w",
            "rmse_A",
            "rmse_pi",
            "selected_idx",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        h.extend((0..dim).map(|i| format!("selected_x{i}")));
        h.push("wall_ms".into());
        h
    }

    pub fn csv_record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut r = vec![
            self.t.to_string(),
            self.strategy.clone(),
            self.entropy.to_string(),
            self.rmse_w.to_string(),
            opt(self.rmse_a),
            opt(self.rmse_pi),
            self.selected_idx.map(|i| i.to_string()).unwrap_or_default(),
        ];
        r.extend(self.selected_x.iter().map(|v| v.to_string()));
        r.push(format!("{:.3}", self.wall_ms));
        r
    }
}

/// How candidates are grouped for summaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BucketKind {
    /// Angle in degrees of a 2-D unit-circle input.
    Angle,
    /// Absolute value of the first input coordinate.
    Magnitude,
    /// No natural coordinate.
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub counts: Vec<usize>,
    pub kind: BucketKind,
    /// Bucketing coordinate per candidate (NaN for [`BucketKind::None`]).
    pub coordinate: Vec<f64>,
}

/// Angle of `(x0, x1)` in degrees on `[0, 360)`.
pub fn angle_deg(x: &[f64]) -> f64 {
    let a = x[1].atan2(x[0]).to_degrees();
    let a = if a < 0.0 { a + 360.0 } else { a };
    // snap grid round-off so 359.9999999 reads as 0
    let r = (a * 1e6).round() / 1e6;
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Count selected candidate indices.
pub fn selection_histogram(selected: &[usize], candidates: &CandidateSet) -> Result<Histogram> {
    let mut counts = vec![0usize; candidates.len()];
    for &i in selected {
        if i >= counts.len() {
            return Err(Error::invalid(format!("selected index {i} out of range")));
        }
        counts[i] += 1;
    }
    let (kind, coordinate) = match candidates.spec() {
        CandidateSpec::CircleGrid { .. } => (
            BucketKind::Angle,
            candidates.inputs().iter().map(|x| angle_deg(x)).collect(),
        ),
        CandidateSpec::LineGrid { .. } => (
            BucketKind::Magnitude,
            candidates.inputs().iter().map(|x| x[0].abs()).collect(),
        ),
        _ => (BucketKind::None, vec![f64::NAN; candidates.len()]),
    };
    Ok(Histogram {
        counts,
        kind,
        coordinate,
    })
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Number of selections whose candidate coordinate satisfies `pred`.
    pub fn count_where(&self, pred: impl Fn(f64) -> bool) -> usize {
        self.counts
            .iter()
            .zip(&self.coordinate)
            .filter(|(_, c)| pred(**c))
            .map(|(n, _)| *n)
            .sum()
    }

    /// Fraction of selections whose coordinate satisfies `pred`.
    pub fn fraction_where(&self, pred: impl Fn(f64) -> bool) -> f64 {
        let t = self.total();
        if t == 0 {
            return 0.0;
        }
        self.count_where(pred) as f64 / t as f64
    }

    /// Counts in unit-width magnitude buckets `[0,1), [1,2), ...` or, for
    /// angles, one bucket per distinct angle. Empty for other sets.
    pub fn buckets(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for (&n, &c) in self.counts.iter().zip(&self.coordinate) {
            let key = match self.kind {
                BucketKind::Angle => c,
                BucketKind::Magnitude => c.floor(),
                BucketKind::None => return Vec::new(),
            };
            match out.iter_mut().find(|(k, _)| *k == key) {
                Some(e) => e.1 += n,
                None => out.push((key, n)),
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    /// CSV with header `candidate_idx,coordinate,count`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["candidate_idx", "coordinate", "count"])?;
        for (i, (n, c)) in self.counts.iter().zip(&self.coordinate).enumerate() {
            let c = if c.is_nan() {
                String::new()
            } else {
                c.to_string()
            };
            w.write_record([i.to_string(), c, n.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ModelFamily, Strategy};
    use crate::data::LogMeta;
    use crate::iohmm::IoHmmParams;
    use approx::assert_abs_diff_eq;

    fn glm(v: f64) -> ParamBundle {
        ParamBundle::Glm(vec![v])
    }

    #[test]
    fn scalar_variance_four() {
        // mean 0, unbiased variance 4 with M = 4: sum of squares 12
        let v = 6f64.sqrt();
        let set = ParamSampleSet::single_chain(vec![glm(v), glm(-v), glm(0.0), glm(0.0)]).unwrap();
        assert_abs_diff_eq!(posterior_entropy(&set).unwrap(), 4f64.ln(), epsilon = 1e-9);
        assert_abs_diff_eq!(posterior_entropy(&set).unwrap(), 1.386, epsilon = 1e-3);
    }

    #[test]
    fn identical_samples_hit_the_floor() {
        let b = ParamBundle::Glm(vec![1.0, 2.0, 3.0]);
        let set = ParamSampleSet::single_chain(vec![b; 10]).unwrap();
        let e = posterior_entropy(&set).unwrap();
        assert_abs_diff_eq!(e, 3.0 * 1e-10f64.ln(), epsilon = 1e-6);
        assert!(posterior_entropy(&ParamSampleSet::single_chain(vec![glm(1.0)]).unwrap()).is_err());
    }

    #[test]
    fn permutation_enumeration() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], vec![0, 1, 2]);
        assert_eq!(p[5], vec![2, 1, 0]);
        assert_eq!(permutations(1), vec![vec![0]]);
    }

    fn hmm() -> ParamBundle {
        ParamBundle::IoHmm(
            IoHmmParams::new(
                vec![vec![5.0, 0.0], vec![1.0, -3.0], vec![1.0, 3.0]],
                vec![
                    vec![0.9, 0.05, 0.05],
                    vec![0.2, 0.7, 0.1],
                    vec![0.0, 0.3, 0.7],
                ],
                vec![0.5, 0.3, 0.2],
            )
            .unwrap(),
        )
    }

    #[test]
    fn aligned_rmse_of_relabelled_truth_is_zero() {
        let t = hmm();
        for perm in permutations(3) {
            let r = aligned_rmse(&t.permuted(&perm), &t).unwrap();
            assert_eq!(r.weights, 0.0);
            assert_eq!(r.transitions, Some(0.0));
            assert_eq!(r.pi, Some(0.0));
        }
    }

    #[test]
    fn weight_rmse_formula() {
        // K = 2, D = 1: one entry off by 0.5
        let t = ParamBundle::Mlr(
            MlrParams::new(vec![vec![-1.0], vec![1.0]], vec![0.6, 0.4], 0.1).unwrap(),
        );
        let e = ParamBundle::Mlr(
            MlrParams::new(vec![vec![1.0], vec![-1.5]], vec![0.4, 0.6], 0.1).unwrap(),
        );
        let r = aligned_rmse(&e, &t).unwrap();
        assert_abs_diff_eq!(r.weights, 0.5 / 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.weights, 0.3536, epsilon = 1e-4);
        assert_eq!(r.perm, vec![1, 0]);
        assert_eq!(r.pi, Some(0.0));
        // K = 1, D = 2 with a (0.3, 0.4) error
        let r = aligned_rmse(
            &ParamBundle::Glm(vec![1.3, 2.4]),
            &ParamBundle::Glm(vec![1.0, 2.0]),
        )
        .unwrap();
        assert_abs_diff_eq!(r.weights, 0.3536, epsilon = 1e-4);
    }

    fn line_log(n: usize) -> ExperimentLog {
        let meta = LogMeta {
            family: ModelFamily::Mlr,
            seed: 0,
            strategy: Strategy::Random,
        };
        let mut log = ExperimentLog::new(2, meta);
        let mut rng = RngStream::new(3, 0);
        for _ in 0..n {
            let x0: f64 = rng.random::<f64>() * 4.0 - 2.0;
            let noise: f64 = rng.random::<f64>() - 0.5;
            log.push(vec![x0, 1.0], 2.0 * x0 - 1.0 + noise).unwrap();
        }
        log
    }

    #[test]
    fn single_state_bic_is_ols() {
        let log = line_log(200);
        // closed-form least squares and its maximized likelihood
        let (mut sxx, mut sx, mut sxy, mut sy) = (0.0, 0.0, 0.0, 0.0);
        let n = log.len() as f64;
        for r in log.trials() {
            sxx += r.x[0] * r.x[0];
            sx += r.x[0];
            sxy += r.x[0] * r.y;
            sy += r.y;
        }
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let icpt = (sy - slope * sx) / n;
        let sse: f64 = log
            .trials()
            .iter()
            .map(|r| (r.y - slope * r.x[0] - icpt).powi(2))
            .sum();
        let s2 = sse / n;
        let ll = -0.5 * n * ((2.0 * std::f64::consts::PI * s2).ln() + 1.0);
        let want = 3.0 * n.ln() - 2.0 * ll;
        let got = bic(&log, 1, &BicOptions::default()).unwrap();
        assert!(got.converged);
        assert_abs_diff_eq!(got.log_lik, ll, epsilon = 1e-6);
        assert_abs_diff_eq!(got.bic, want, epsilon = 1e-6);
        assert_eq!(got.n_params, 3);
    }

    #[test]
    fn duplicated_state_cannot_beat_single() {
        let log = line_log(150);
        let one = bic(&log, 1, &BicOptions::default()).unwrap();
        let w = one.params.weights[0].clone();
        let dup = MlrParams::new(vec![w.clone(), w], vec![0.5, 0.5], one.params.sigma_sq).unwrap();
        let b2 = bic_at(&log, &dup).unwrap();
        assert!(b2 >= one.bic - 1e-6);
        assert_abs_diff_eq!(b2 - one.bic, 3.0 * 150f64.ln(), epsilon = 1e-6);
    }

    #[test]
    fn empty_log_errors() {
        let log = line_log(0);
        assert!(bic(&log, 1, &BicOptions::default()).is_err());
    }

    #[test]
    fn histogram_spike_and_buckets() {
        let c = CandidateSet::build(&CandidateSpec::CircleGrid { step_deg: 10.0 }).unwrap();
        let h = selection_histogram(&[0; 12], &c).unwrap();
        assert_eq!(h.counts[0], 12);
        assert_eq!(h.total(), 12);
        assert_eq!(h.coordinate[9], 90.0);
        assert_eq!(h.buckets().len(), 36);

        let l = CandidateSet::build(&CandidateSpec::LineGrid {
            lo: -5.0,
            hi: 5.0,
            step: 0.5,
        })
        .unwrap();
        let sel: Vec<usize> = (0..l.len()).collect();
        let h = selection_histogram(&sel, &l).unwrap();
        // |x| ∈ {3.5, 4, 4.5, 5} on both sides
        assert_eq!(h.count_where(|m| m > 3.0), 8);
        assert_eq!(h.buckets().iter().map(|b| b.1).sum::<usize>(), l.len());
    }
}
