//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Jitter ladder used when factoring covariance matrices: start at 1e-10,
/// multiply by ten, give up beyond 1e-4.
pub const JITTER_START: f64 = 1e-10;
pub const JITTER_MAX: f64 = 1e-4;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Lower-triangular `L` with `L Lᵀ = a` for symmetric positive
/// semi-definite `a`. Pivots within a relative tolerance of zero produce a
/// zero column instead of failing, so rank-deficient covariances (including
/// the zero matrix) factor exactly. Returns `None` on a clearly negative pivot.
pub fn psd_cholesky(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0f64, f64::max);
    let tol = 1e-13 * scale.max(f64::MIN_POSITIVE);
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < -tol || !d.is_finite() {
            return None;
        }
        if d <= tol {
            // Zero pivot: the remaining entries of this column must vanish too.
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if s.abs() > 1e-8 * scale + tol {
                    return None;
                }
            }
            continue;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Factor a covariance, escalating diagonal jitter 1e-10, 1e-9, ... 1e-4
/// until [`psd_cholesky`] succeeds. Returns the factor and the jitter used.
pub fn cholesky_with_jitter(cov: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if let Some(l) = psd_cholesky(cov) {
        return Ok((l, 0.0));
    }
    let n = cov.nrows();
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * (1.0 + 1e-9) {
        let mut shifted = cov.clone();
        for i in 0..n {
            shifted[(i, i)] += jitter;
        }
        if let Some(l) = psd_cholesky(&shifted) {
            return Ok((l, jitter));
        }
        jitter *= 10.0;
    }
    Err(Error::numerical(
        "covariance is not positive semi-definite after jitter up to 1e-4",
    ))
}

/// Cholesky of a symmetric positive-definite matrix with the same jitter
/// ladder, for precision matrices that must be strictly definite.
pub fn spd_cholesky(p: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(p.clone()) {
        return Ok(c);
    }
    let n = p.nrows();
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * (1.0 + 1e-9) {
        let mut shifted = p.clone();
        for i in 0..n {
            shifted[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(shifted) {
            return Ok(c);
        }
        jitter *= 10.0;
    }
    Err(Error::numerical("matrix is not positive definite"))
}

/// Gaussian in information form: precision `P` and mean `P⁻¹ b`.
#[derive(Clone, Debug)]
pub struct PrecisionGaussian {
    pub mean: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    /// Lower factor with the upper triangle zeroed.
    l: DMatrix<f64>,
}

impl PrecisionGaussian {
    pub fn from_precision(precision: &DMatrix<f64>, linear: &DVector<f64>) -> Result<Self> {
        let chol = spd_cholesky(precision)?;
        let mean = chol.solve(linear);
        let l = chol.l();
        Ok(PrecisionGaussian { mean, chol, l })
    }

    pub fn with_mean(precision: &DMatrix<f64>, mean: DVector<f64>) -> Result<Self> {
        let chol = spd_cholesky(precision)?;
        let l = chol.l();
        Ok(PrecisionGaussian { mean, chol, l })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    /// `mean + L⁻ᵀ z` for a standard normal vector `z`.
    pub fn transform(&self, z: &DVector<f64>) -> DVector<f64> {
        let u = self
            .l
            .tr_solve_lower_triangular(z)
            .expect("Cholesky factor has a non-zero diagonal");
        &self.mean + u
    }

    /// Log density up to the normalizing constant shared by all points.
    pub fn unnormalized_ln_pdf(&self, w: &[f64]) -> f64 {
        let d = DVector::from_column_slice(w) - &self.mean;
        // ‖Lᵀ d‖² = dᵀ P d
        let ltd = self.l.tr_mul(&d);
        -0.5 * ltd.norm_squared()
    }

    pub fn ln_det_precision(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }
}

/// Log-determinant of a symmetric positive-definite matrix.
pub fn ln_det_spd(a: &DMatrix<f64>) -> Result<f64> {
    let c = spd_cholesky(a)?;
    Ok(2.0 * c.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}
