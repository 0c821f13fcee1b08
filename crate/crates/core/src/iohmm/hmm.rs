//! Scaled forward-backward recursions and forward-filtering
//! backward-sampling of state paths.
//!
//! Likelihoods enter in log space. Each row is shifted by its maximum before
//! exponentiation, and forward messages are renormalized at every step, so
//! long sequences never underflow. The transition matrix need not be
//! row-stochastic, which lets variational updates reuse the same code with
//! `exp E[ln A]`.

use rand::Rng;

use super::glm::bernoulli_ln_lik;
use super::IoHmmParams;
use crate::data::ExperimentLog;
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::randkit::categorical_unchecked;

#[derive(Clone, Debug, PartialEq)]
pub struct HmmMessages {
    /// Normalized forward messages `α̂_t = p(z_t | y_{1:t})`.
    pub alpha: Vec<Vec<f64>>,
    /// Scaled backward messages.
    pub beta: Vec<Vec<f64>>,
    /// Likelihoods with each row divided by its maximum.
    pub lik: Vec<Vec<f64>>,
    /// Forward normalizers of the shifted likelihoods.
    pub c: Vec<f64>,
    /// `ln c_t` plus the row shift; these sum to the log marginal likelihood.
    pub ln_scale: Vec<f64>,
}

impl HmmMessages {
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn log_marginal(&self) -> f64 {
        self.ln_scale.iter().sum()
    }

    /// Unary posteriors `p(z_t = k | y_{1:T})`.
    pub fn posteriors(&self) -> Vec<Vec<f64>> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .map(|(a, b)| {
                let mut g: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
                let s: f64 = g.iter().sum();
                g.iter_mut().for_each(|v| *v /= s);
                g
            })
            .collect()
    }

    /// Pairwise posterior `p(z_{t−1} = j, z_t = k | y_{1:T})` for `t ≥ 1`
    /// (0-based).
    pub fn pairwise(&self, a: &[Vec<f64>], t: usize) -> Vec<Vec<f64>> {
        let k = a.len();
        let mut xi = vec![vec![0.0; k]; k];
        let mut total = 0.0;
        for j in 0..k {
            for l in 0..k {
                let v =
                    self.alpha[t - 1][j] * a[j][l] * self.lik[t][l] * self.beta[t][l] / self.c[t];
                xi[j][l] = v;
                total += v;
            }
        }
        // exact arithmetic gives total = 1; remove rounding drift
        xi.iter_mut().flatten().for_each(|v| *v /= total);
        xi
    }

    /// `Σ_t` of the pairwise posteriors.
    pub fn pairwise_sum(&self, a: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let k = a.len();
        let mut out = vec![vec![0.0; k]; k];
        for t in 1..self.len() {
            let xi = self.pairwise(a, t);
            for j in 0..k {
                for l in 0..k {
                    out[j][l] += xi[j][l];
                }
            }
        }
        out
    }
}

/// `ln p(y_t | x_t, w_k)` for every trial and state.
pub fn emission_loglik(log: &ExperimentLog, weights: &[Vec<f64>]) -> Vec<Vec<f64>> {
    log.trials()
        .iter()
        .map(|r| {
            weights
                .iter()
                .map(|w| bernoulli_ln_lik(r.y, dot(&r.x, w)))
                .collect()
        })
        .collect()
}

fn shift_row(row: &[f64], out: &mut [f64]) -> Result<f64> {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Err(Error::numerical(
            "every state has zero likelihood at some trial",
        ));
    }
    for (o, v) in out.iter_mut().zip(row) {
        *o = (v - m).exp();
    }
    Ok(m)
}

/// Scaled forward-backward pass.
pub fn forward_backward(ln_lik: &[Vec<f64>], pi0: &[f64], a: &[Vec<f64>]) -> Result<HmmMessages> {
    let t_len = ln_lik.len();
    let k = pi0.len();
    let mut lik = vec![vec![0.0; k]; t_len];
    let mut alpha = vec![vec![0.0; k]; t_len];
    let mut c = vec![0.0; t_len];
    let mut ln_scale = vec![0.0; t_len];
    for t in 0..t_len {
        let m = shift_row(&ln_lik[t], &mut lik[t])?;
        let mut s = 0.0;
        for l in 0..k {
            let prior = if t == 0 {
                pi0[l]
            } else {
                (0..k).map(|j| alpha[t - 1][j] * a[j][l]).sum()
            };
            alpha[t][l] = prior * lik[t][l];
            s += alpha[t][l];
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::numerical("forward normalizer vanished"));
        }
        alpha[t].iter_mut().for_each(|v| *v /= s);
        c[t] = s;
        ln_scale[t] = s.ln() + m;
    }
    let mut beta = vec![vec![1.0; k]; t_len];
    for t in (0..t_len.saturating_sub(1)).rev() {
        for j in 0..k {
            let mut s = 0.0;
            for l in 0..k {
                s += a[j][l] * lik[t + 1][l] * beta[t + 1][l];
            }
            beta[t][j] = s / c[t + 1];
        }
    }
    Ok(HmmMessages {
        alpha,
        beta,
        lik,
        c,
        ln_scale,
    })
}

/// Forward-backward for a log under the given parameters.
pub fn forward_backward_params(log: &ExperimentLog, p: &IoHmmParams) -> Result<HmmMessages> {
    forward_backward(&emission_loglik(log, &p.weights), &p.pi0, &p.a)
}

/// Last filtered state distribution `p(z_T | y_{1:T})`, or `pi0` for an
/// empty sequence. Forward pass only.
pub fn forward_filter_last(ln_lik: &[Vec<f64>], pi0: &[f64], a: &[Vec<f64>]) -> Vec<f64> {
    let k = pi0.len();
    let mut cur = pi0.to_vec();
    let mut next = vec![0.0; k];
    for (t, row) in ln_lik.iter().enumerate() {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for l in 0..k {
            let prior = if t == 0 {
                pi0[l]
            } else {
                (0..k).map(|j| cur[j] * a[j][l]).sum()
            };
            next[l] = prior * (row[l] - m).exp();
            s += next[l];
        }
        if s > 0.0 && s.is_finite() {
            next.iter_mut().for_each(|v| *v /= s);
            std::mem::swap(&mut cur, &mut next);
        }
    }
    cur
}

/// One-step-ahead state distribution `Σ_j p(z_T = j | y_{1:T}) A_{j,:}`, or
/// `pi0` when nothing has been observed.
pub fn predict_next_state(ln_lik: &[Vec<f64>], pi0: &[f64], a: &[Vec<f64>]) -> Vec<f64> {
    if ln_lik.is_empty() {
        return pi0.to_vec();
    }
    let last = forward_filter_last(ln_lik, pi0, a);
    let k = pi0.len();
    (0..k)
        .map(|l| (0..k).map(|j| last[j] * a[j][l]).sum())
        .collect()
}

/// Draw a state path from its exact posterior: `z_1 ∝ π L_1 β̂_1`, then
/// `z_t ∝ A_{z_{t−1},·} L_t β̂_t`.
pub fn sample_state_sequence<R: Rng + ?Sized>(
    pi0: &[f64],
    a: &[Vec<f64>],
    msgs: &HmmMessages,
    rng: &mut R,
) -> Vec<usize> {
    let k = pi0.len();
    let mut z: Vec<usize> = Vec::with_capacity(msgs.len());
    let mut w = vec![0.0; k];
    for t in 0..msgs.len() {
        let mut total = 0.0;
        for l in 0..k {
            let prior = if t == 0 { pi0[l] } else { a[z[t - 1]][l] };
            w[l] = prior * msgs.lik[t][l] * msgs.beta[t][l];
            total += w[l];
        }
        z.push(categorical_unchecked(&w, total, rng));
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randkit::log_sum_exp;
    use crate::rng::RngStream;

    fn enumerate_paths(ln_lik: &[Vec<f64>], pi0: &[f64], a: &[Vec<f64>]) -> Vec<(Vec<usize>, f64)> {
        let t_len = ln_lik.len();
        let k = pi0.len();
        let n = k.pow(t_len as u32);
        (0..n)
            .map(|mut code| {
                let mut path = vec![0; t_len];
                for p in path.iter_mut() {
                    *p = code % k;
                    code /= k;
                }
                let mut lp = pi0[path[0]].ln() + ln_lik[0][path[0]];
                for t in 1..t_len {
                    lp += a[path[t - 1]][path[t]].ln() + ln_lik[t][path[t]];
                }
                (path, lp)
            })
            .collect()
    }

    #[test]
    fn single_state_marginal() {
        let ln_lik = vec![vec![-0.3], vec![-1.2], vec![-0.01]];
        let m = forward_backward(&ln_lik, &[1.0], &[vec![1.0]]).unwrap();
        assert!((m.log_marginal() - (-1.51)).abs() < 1e-12);
        assert!(m.posteriors().iter().all(|r| (r[0] - 1.0).abs() < 1e-15));
    }

    #[test]
    fn uniform_everything_gives_uniform_posteriors() {
        let k = 3;
        let a = vec![vec![1.0 / 3.0; k]; k];
        let ln_lik = vec![vec![-0.7; k]; 5];
        let m = forward_backward(&ln_lik, &[1.0 / 3.0; 3], &a).unwrap();
        for r in m.posteriors() {
            for v in r {
                assert!((v - 1.0 / 3.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn two_step_matches_enumeration() {
        let ln_lik = vec![vec![-0.2, -1.5], vec![-2.0, -0.1]];
        let pi0 = [0.3, 0.7];
        let a = vec![vec![0.9, 0.1], vec![0.25, 0.75]];
        let m = forward_backward(&ln_lik, &pi0, &a).unwrap();
        let paths = enumerate_paths(&ln_lik, &pi0, &a);
        let lps: Vec<f64> = paths.iter().map(|p| p.1).collect();
        let z = log_sum_exp(&lps);
        assert!((m.log_marginal() - z).abs() < 1e-12);
        let post = m.posteriors();
        for t in 0..2 {
            for k in 0..2 {
                let oracle: f64 = paths
                    .iter()
                    .filter(|p| p.0[t] == k)
                    .map(|p| (p.1 - z).exp())
                    .sum();
                assert!((post[t][k] - oracle).abs() < 1e-12);
            }
        }
        let xi = m.pairwise(&a, 1);
        for j in 0..2 {
            for k in 0..2 {
                let oracle: f64 = paths
                    .iter()
                    .filter(|p| p.0[0] == j && p.0[1] == k)
                    .map(|p| (p.1 - z).exp())
                    .sum();
                assert!((xi[j][k] - oracle).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forced_state_and_absorbing_chain() {
        let mut rng = RngStream::new(1, 0);
        let ln_lik = vec![vec![0.0, f64::NEG_INFINITY]; 6];
        let a = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let m = forward_backward(&ln_lik, &[0.5, 0.5], &a).unwrap();
        for _ in 0..100 {
            assert!(sample_state_sequence(&[0.5, 0.5], &a, &m, &mut rng)
                .iter()
                .all(|s| *s == 0));
        }
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let tie = vec![vec![-0.5, -0.5]; 4];
        let m = forward_backward(&tie, &[0.2, 0.8], &eye).unwrap();
        let mut first = 0;
        for _ in 0..20_000 {
            let z = sample_state_sequence(&[0.2, 0.8], &eye, &m, &mut rng);
            assert!(z.iter().all(|s| *s == z[0]));
            first += (z[0] == 0) as usize;
        }
        let f = first as f64 / 20_000.0;
        assert!((f - 0.2).abs() < 4.0 * (0.16f64 / 20_000.0).sqrt());
    }

    #[test]
    fn long_sequence_does_not_underflow() {
        let ln_lik: Vec<Vec<f64>> = (0..5000)
            .map(|t| vec![-3.0 - (t % 7) as f64, -4.0])
            .collect();
        let a = vec![vec![0.95, 0.05], vec![0.05, 0.95]];
        let m = forward_backward(&ln_lik, &[0.5, 0.5], &a).unwrap();
        assert!(m.log_marginal().is_finite());
        assert!(m.posteriors().iter().flatten().all(|v| v.is_finite()));
    }

    #[test]
    fn predict_next_state_empty_is_pi0() {
        let a = vec![vec![0.9, 0.1], vec![0.2, 0.8]];
        assert_eq!(predict_next_state(&[], &[0.3, 0.7], &a), vec![0.3, 0.7]);
        let ln_lik = vec![vec![0.0, f64::NEG_INFINITY]];
        let p = predict_next_state(&ln_lik, &[0.5, 0.5], &a);
        assert!((p[0] - 0.9).abs() < 1e-15);
    }
}
