//! l1-regularized least squares `min 1/2 ||y - X a||^2 + lambda ||a||_1`, solved by
//! ADMM with residual balancing. Backs the SRC baseline.
//!
//! The `a`-step solves `(X^T X + rho I) a = b` through a thin SVD of `X`
//! computed once, so changing `rho` costs nothing and each solve is
//! `O(n * rank)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prox::{shrink, RANK_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LassoOptions {
    /// Initial ADMM penalty.
    pub rho: f64,
    /// Absolute tolerance, scaled by `sqrt(n)` in the stopping test.
    pub abs_tol: f64,
    /// Relative tolerance on the primal and dual residuals.
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            rho: 1.0,
            abs_tol: 1e-9,
            rel_tol: 1e-7,
            max_iters: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution {
    /// Exactly sparse (the thresholded ADMM split variable).
    pub alpha: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
}

pub fn lasso_objective(x: &DMatrix<f64>, y: &DVector<f64>, alpha: &DVector<f64>, lambda: f64) -> f64 {
    0.5 * (y - x * alpha).norm_squared() + lambda * alpha.lp_norm(1)
}

#[derive(Debug, Clone)]
pub struct LassoSolver {
    x: DMatrix<f64>,
    /// Right singular vectors of `X` with nonzero singular values (`n x r`).
    w: DMatrix<f64>,
    /// Squared singular values.
    s2: DVector<f64>,
    opts: LassoOptions,
}

impl LassoSolver {
    pub fn new(x: &DMatrix<f64>, opts: LassoOptions) -> Result<Self> {
        if !(opts.rho > 0.0 && opts.abs_tol > 0.0 && opts.rel_tol >= 0.0 && opts.max_iters > 0) {
            return Err(Error::Config(format!("invalid lasso options {opts:?}")));
        }
        if x.is_empty() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("lasso dictionary must be non-empty and finite"));
        }
        let svd = x.clone().svd(false, true);
        let v_t = svd.v_t.ok_or(Error::SingularGram)?;
        let smax = svd.singular_values.max();
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > RANK_TOL * smax)
            .collect();
        let w = v_t.select_rows(&keep).transpose();
        let s2 = DVector::from_iterator(keep.len(), keep.iter().map(|&i| svd.singular_values[i].powi(2)));
        Ok(Self {
            x: x.clone(),
            w,
            s2,
            opts,
        })
    }

    /// `(X^T X + rho I)^{-1} b`.
    fn gram_solve(&self, b: &DVector<f64>, rho: f64) -> DVector<f64> {
        let c = self.w.tr_mul(b);
        let scaled = DVector::from_iterator(
            c.len(),
            c.iter().zip(self.s2.iter()).map(|(ci, s)| ci / (s + rho) - ci / rho),
        );
        b / rho + &self.w * scaled
    }

    pub fn solve(&self, y: &DVector<f64>, lambda: f64) -> Result<LassoSolution> {
        if y.len() != self.x.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.x.nrows(),
                actual: y.len(),
                context: "query vs dictionary feature dimension",
            });
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("lasso lambda must be >= 0, got {lambda}")));
        }
        let n = self.x.ncols();
        let mut rho = self.opts.rho;
        let xty = self.x.tr_mul(y);
        let mut z = DVector::zeros(n);
        // scaled dual variable
        let mut u = DVector::<f64>::zeros(n);
        let mut converged = false;
        let mut iterations = self.opts.max_iters;
        let eps_abs = (n as f64).sqrt() * self.opts.abs_tol;
        for iter in 1..=self.opts.max_iters {
            let a = self.gram_solve(&(&xty + (&z - &u) * rho), rho);
            let z_old = std::mem::replace(&mut z, (&a + &u).map(|v| shrink(v, lambda / rho)));
            u += &a - &z;
            if !u.iter().all(|v| v.is_finite()) {
                return Err(Error::NumericalDivergence { iteration: iter });
            }
            let primal = (&a - &z).norm();
            let dual = rho * (&z - &z_old).norm();
            let eps_pri = eps_abs + self.opts.rel_tol * a.norm().max(z.norm());
            let eps_dual = eps_abs + self.opts.rel_tol * rho * u.norm();
            if primal <= eps_pri && dual <= eps_dual {
                converged = true;
                iterations = iter;
                break;
            }
            if primal > 10.0 * dual {
                rho *= 2.0;
                u /= 2.0;
            } else if dual > 10.0 * primal {
                rho /= 2.0;
                u *= 2.0;
            }
        }
        let objective = lasso_objective(&self.x, y, &z, lambda);
        Ok(LassoSolution {
            alpha: z,
            iterations,
            converged,
            objective,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Cyclic coordinate descent, run to a fixed point.
    fn coordinate_descent(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> DVector<f64> {
        let n = x.ncols();
        let mut a = DVector::<f64>::zeros(n);
        let mut r = y.clone();
        for _ in 0..200_000 {
            let mut delta: f64 = 0.0;
            for j in 0..n {
                let xj = x.column(j);
                let sq = xj.norm_squared();
                let rho_j = xj.dot(&r) + sq * a[j];
                let new = shrink(rho_j, lambda) / sq;
                let d = new - a[j];
                if d != 0.0 {
                    r.axpy(-d, &xj, 1.0);
                    a[j] = new;
                    delta = delta.max(d.abs());
                }
            }
            if delta < 1e-15 {
                break;
            }
        }
        a
    }

    #[test]
    fn matches_coordinate_descent() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for &(m, n, lambda) in &[(8, 5, 0.05), (6, 10, 0.1), (10, 12, 0.02)] {
            let x = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
            let y = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
            let sol = LassoSolver::new(&x, LassoOptions::default())
                .unwrap()
                .solve(&y, lambda)
                .unwrap();
            assert!(sol.converged);
            let cd = coordinate_descent(&x, &y, lambda);
            assert!((&sol.alpha - &cd).amax() < 1e-6, "{} vs {}", sol.alpha, cd);
        }
    }

    #[test]
    fn huge_lambda_gives_zero() {
        let x = DMatrix::from_fn(4, 3, |i, j| (i + 2 * j) as f64 * 0.1 + 0.3);
        let y = DVector::from_element(4, 1.0);
        let sol = LassoSolver::new(&x, LassoOptions::default())
            .unwrap()
            .solve(&y, 1e6)
            .unwrap();
        assert_eq!(sol.alpha, DVector::zeros(3));
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = DMatrix::identity(3, 3);
        let solver = LassoSolver::new(&x, LassoOptions::default()).unwrap();
        assert!(solver.solve(&DVector::zeros(2), 0.1).is_err());
        assert!(solver.solve(&DVector::zeros(3), -0.1).is_err());
        let bad = LassoOptions {
            rho: 0.0,
            ..Default::default()
        };
        assert!(LassoSolver::new(&x, bad).is_err());
    }
}
