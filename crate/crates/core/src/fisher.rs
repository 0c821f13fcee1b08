//! Fisher information of the MLR weights at a single input.
//!
//! Block `(i, j)` of the `KD×KD` matrix is
//! `E_y[(y − xᵀw_i)(y − xᵀw_j) r_i(y) r_j(y)] xxᵀ / σ⁴` with `r` the
//! component responsibilities and the expectation over the marginal
//! predictive. Two limits have closed forms: perfectly identifiable
//! components give `diag(π) ⊗ xxᵀ / σ²`, fully overlapping ones give
//! `ππᵀ ⊗ xxᵀ / σ²`. Anything in between is estimated by Monte Carlo.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::mlr::{check_simplex, MlrParams};
use crate::par::{self, Execution};
use crate::randkit::{categorical_unchecked, normalize_log_weights};
use crate::rng::RngStream;

/// Symmetric `KD×KD` matrix made of a `K×K` grid of `D×D` blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct FisherMatrix {
    pub k: usize,
    pub d: usize,
    pub j: DMatrix<f64>,
}

impl FisherMatrix {
    /// `coef ⊗ xxᵀ / σ²`.
    fn kron(coef: &DMatrix<f64>, x: &[f64], sigma_sq: f64) -> Self {
        let k = coef.nrows();
        let d = x.len();
        let mut j = DMatrix::zeros(k * d, k * d);
        for bi in 0..k {
            for bj in 0..k {
                let c = coef[(bi, bj)] / sigma_sq;
                if c == 0.0 {
                    continue;
                }
                for a in 0..d {
                    for b in 0..d {
                        j[(bi * d + a, bj * d + b)] = c * x[a] * x[b];
                    }
                }
            }
        }
        FisherMatrix { k, d, j }
    }

    pub fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        self.j
            .view((i * self.d, j * self.d), (self.d, self.d))
            .into_owned()
    }

    pub fn trace(&self) -> f64 {
        self.j.trace()
    }
}

fn check(x: &[f64], pi: &[f64], sigma_sq: f64) -> Result<()> {
    check_simplex(pi, "pi")?;
    if x.is_empty() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("input must be a non-empty finite vector"));
    }
    if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
        return Err(Error::invalid("sigma_sq must be positive"));
    }
    Ok(())
}

/// Perfect identifiability: block `i` is `(π_i/σ²) xxᵀ`, off-diagonal blocks
/// vanish.
pub fn fisher_identifiable(x: &[f64], pi: &[f64], sigma_sq: f64) -> Result<FisherMatrix> {
    check(x, pi, sigma_sq)?;
    let coef = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(pi));
    Ok(FisherMatrix::kron(&coef, x, sigma_sq))
}

/// No identifiability: block `(i, j)` is `(π_i π_j/σ²) xxᵀ`.
pub fn fisher_nonidentifiable(x: &[f64], pi: &[f64], sigma_sq: f64) -> Result<FisherMatrix> {
    check(x, pi, sigma_sq)?;
    let v = nalgebra::DVector::from_column_slice(pi);
    Ok(FisherMatrix::kron(&(&v * v.transpose()), x, sigma_sq))
}

/// Monte Carlo estimate of `Tr J(x)` with its standard error (`None` when
/// `n = 1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEstimate {
    pub trace: f64,
    pub stderr: Option<f64>,
}

/// Draw `n` outputs from the marginal predictive at `x` and average
/// `‖x‖² Σ_i (y − xᵀw_i)² r_i(y)² / σ⁴`.
pub fn fisher_mc_trace<R: Rng + ?Sized>(
    x: &[f64],
    params: &MlrParams,
    n: usize,
    rng: &mut R,
) -> Result<TraceEstimate> {
    params.validate()?;
    if n == 0 {
        return Err(Error::invalid("need at least one Monte Carlo sample"));
    }
    if x.len() != params.dim() {
        return Err(Error::invalid("input dimension does not match the weights"));
    }
    let k = params.k();
    let s2 = params.sigma_sq;
    let sigma = s2.sqrt();
    let means: Vec<f64> = params.weights.iter().map(|w| dot(x, w)).collect();
    let ln_pi: Vec<f64> = params.pi.iter().map(|p| p.ln()).collect();
    let xx = dot(x, x);
    let mut lw = vec![0.0; k];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n {
        let z = categorical_unchecked(&params.pi, 1.0, rng);
        let e: f64 = rng.sample(StandardNormal);
        let y = means[z] + sigma * e;
        for i in 0..k {
            let r = y - means[i];
            lw[i] = ln_pi[i] - 0.5 * r * r / s2;
        }
        normalize_log_weights(&mut lw);
        let mut f = 0.0;
        for i in 0..k {
            let r = y - means[i];
            f += r * r * lw[i] * lw[i];
        }
        f *= xx / (s2 * s2);
        sum += f;
        sum_sq += f * f;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let stderr = (n > 1).then(|| {
        let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
        (var / nf).sqrt()
    });
    Ok(TraceEstimate {
        trace: mean,
        stderr,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanRow {
    pub angle_deg: f64,
    pub sigma_sq: f64,
    pub trace: f64,
    pub stderr: Option<f64>,
}

pub const DEFAULT_SCAN_SIGMA_SQ: [f64; 3] = [0.1, 0.5, 1.0];

/// `0, step, 2·step, … < 360`.
pub fn angle_grid(step_deg: f64) -> Vec<f64> {
    let n = (360.0 / step_deg).round() as usize;
    (0..n).map(|i| i as f64 * step_deg).collect()
}

/// Unit input at `angle` degrees.
pub fn unit_input(angle_deg: f64) -> Vec<f64> {
    let a = angle_deg.to_radians();
    vec![a.cos(), a.sin()]
}

/// MC trace at unit inputs for every (σ², angle) pair, σ² outermost. Each
/// grid point draws from its own stream so the table does not depend on
/// the execution mode.
pub fn fisher_angle_scan(
    model: &MlrParams,
    angles_deg: &[f64],
    sigma_sqs: &[f64],
    n: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<ScanRow>> {
    if model.dim() != 2 {
        return Err(Error::config(format!(
            "angle scans need a 2-D model, got D={}",
            model.dim()
        )));
    }
    let root = RngStream::new(seed, crate::rng::labels::METRICS);
    let na = angles_deg.len();
    let rows = par::map_range(na * sigma_sqs.len(), exec, |idx| {
        let (si, ai) = (idx / na, idx % na);
        let mut p = model.clone();
        p.sigma_sq = sigma_sqs[si];
        let mut rng = root.fork_indexed(crate::rng::labels::STRATEGY, idx as u64);
        fisher_mc_trace(&unit_input(angles_deg[ai]), &p, n, &mut rng).map(|t| ScanRow {
            angle_deg: angles_deg[ai],
            sigma_sq: sigma_sqs[si],
            trace: t.trace,
            stderr: t.stderr,
        })
    });
    rows.into_iter().collect()
}

/// Total angular width (degrees) of scan points whose trace is below
/// `frac` of `reference`, for one noise level. Each point stands for
/// `step_deg` of arc.
pub fn dip_width(rows: &[ScanRow], sigma_sq: f64, reference: f64, frac: f64, step_deg: f64) -> f64 {
    rows.iter()
        .filter(|r| r.sigma_sq == sigma_sq && r.trace < frac * reference)
        .count() as f64
        * step_deg
}

/// Write the scan as CSV with header `angle_deg,sigma_sq,trace,stderr`.
pub fn write_scan_csv<W: std::io::Write>(out: W, rows: &[ScanRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["angle_deg", "sigma_sq", "trace", "stderr"])?;
    for r in rows {
        w.write_record([
            r.angle_deg.to_string(),
            r.sigma_sq.to_string(),
            r.trace.to_string(),
            r.stderr.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// The two-state model with `w = ±(1, 0)` and uniform mixing.
pub fn symmetric_model(sigma_sq: f64) -> MlrParams {
    MlrParams {
        weights: vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
        pi: vec![0.5, 0.5],
        sigma_sq,
    }
}
