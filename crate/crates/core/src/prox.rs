//! Spectral and proximal operators: trace norm, singular value thresholding,
//! soft-thresholding and the correlation regularizer `||X Diag(alpha)||_*`.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};

/// Relative cutoff below which a singular value counts as zero for rank decisions.
pub const RANK_TOL: f64 = 1e-12;

/// Singular value decomposition with singular values sorted in descending order.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl SvdFactors {
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        check_finite(m.as_slice(), "matrix")?;
        let svd = SVD::try_new(m.clone(), true, true, f64::EPSILON, 0)
            .ok_or_else(|| Error::invalid("SVD did not converge"))?;
        let (u, v_t) = match (svd.u, svd.v_t) {
            (Some(u), Some(v_t)) => (u, v_t),
            _ => return Err(Error::invalid("SVD did not produce singular vectors")),
        };
        let s = svd.singular_values;
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
        let u = u.select_columns(&order);
        let v = v_t.transpose().select_columns(&order);
        let s = DVector::from_iterator(s.len(), order.iter().map(|&i| s[i]));
        Ok(Self { u, s, v })
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (mut col, &s) in us.column_iter_mut().zip(self.s.iter()) {
            col *= s;
        }
        us * self.v.transpose()
    }

    /// Number of singular values above `RANK_TOL * max(s)`.
    pub fn rank(&self) -> usize {
        numerical_rank(self.s.as_slice())
    }
}

pub fn numerical_rank(s: &[f64]) -> usize {
    let smax = s.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > RANK_TOL * smax).count()
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("non-finite entry in {what}")))
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("threshold must be finite and >= 0, got {tau}")))
    }
}

/// Singular values only; skips forming the singular vectors.
pub fn singular_values(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_finite(m.as_slice(), "matrix")?;
    if m.is_empty() {
        return Ok(DVector::zeros(0));
    }
    SVD::try_new(m.clone(), false, false, f64::EPSILON, 0)
        .map(|svd| svd.singular_values)
        .ok_or_else(|| Error::invalid("SVD did not converge"))
}

/// Sum of singular values.
pub fn trace_norm(m: &DMatrix<f64>) -> Result<f64> {
    Ok(singular_values(m)?.sum())
}

/// `X Diag(alpha)`: column `j` of `x` scaled by `alpha[j]`.
pub fn scale_columns(x: &DMatrix<f64>, alpha: &DVector<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != alpha.len() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            actual: alpha.len(),
            context: "coefficients vs dictionary columns",
        });
    }
    let mut out = x.clone();
    for (mut col, &a) in out.column_iter_mut().zip(alpha.iter()) {
        col *= a;
    }
    Ok(out)
}

/// The correlation regularizer `||X Diag(alpha)||_*`.
///
/// For column-normalized `X` this lies between `||alpha||_2` and `||alpha||_1`,
/// hitting the former when all columns coincide and the latter when they are
/// orthonormal.
pub fn correlation_regularizer(x: &DMatrix<f64>, alpha: &DVector<f64>) -> Result<f64> {
    check_finite(alpha.as_slice(), "coefficients")?;
    trace_norm(&scale_columns(x, alpha)?)
}

/// Singular value thresholding, the proximal map of `tau * ||.||_*`.
pub fn svt(m: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    check_tau(tau)?;
    check_finite(m.as_slice(), "matrix")?;
    if tau == 0.0 || m.iter().all(|&v| v == 0.0) {
        return Ok(m.clone());
    }
    svt_unchecked(m, tau)
}

/// Thresholding without input validation, for the solver hot loop.
pub(crate) fn svt_unchecked(m: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    let (rows, cols) = m.shape();
    if m.iter().all(|&v| v == 0.0) {
        return Ok(DMatrix::zeros(rows, cols));
    }
    // faer's thin SVD is several times faster than nalgebra's at these sizes
    let a = faer::MatRef::from_column_major_slice(m.as_slice(), rows, cols);
    let svd = a.thin_svd().map_err(|_| Error::invalid("SVD did not converge"))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let keep = (0..s.nrows()).filter(|&i| s[i] > tau).count();
    let mut out = DMatrix::zeros(rows, cols);
    if keep == 0 {
        return Ok(out);
    }
    let mut us = u.subcols(0, keep).to_owned();
    for j in 0..keep {
        let w = s[j] - tau;
        us.col_mut(j).iter_mut().for_each(|x| *x *= w);
    }
    let prod = us * v.subcols(0, keep).transpose();
    for j in 0..cols {
        for i in 0..rows {
            out[(i, j)] = prod[(i, j)];
        }
    }
    Ok(out)
}

/// `y += a * x` over matrices of equal shape.
pub(crate) fn axpy_mat(y: &mut DMatrix<f64>, a: f64, x: &DMatrix<f64>) {
    debug_assert_eq!(y.shape(), x.shape());
    for (yi, xi) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *yi += a * xi;
    }
}

/// Elementwise shrinkage `sign(v) * max(|v| - tau, 0)`.
pub fn soft_threshold(v: &DVector<f64>, tau: f64) -> Result<DVector<f64>> {
    check_tau(tau)?;
    check_finite(v.as_slice(), "vector")?;
    Ok(v.map(|x| shrink(x, tau)))
}

#[inline]
pub(crate) fn shrink(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}
