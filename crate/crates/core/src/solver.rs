//! Alternating-direction solver for the trace-Lasso coding model
//!
//! ```text
//! min_alpha ||y - X alpha||_1 + lambda ||X Diag(alpha)||_*
//! ```
//!
//! rewritten with `e = y - X alpha` and `J = X Diag(alpha)` and attacked on the
//! augmented Lagrangian
//!
//! ```text
//! ||e||_1 + lambda ||J||_* + <y1, y - X alpha - e> + <Y2, J - X Diag(alpha)>
//!   + mu/2 (||y - X alpha - e||^2 + ||J - X Diag(alpha)||_F^2)
//! ```
//!
//! One sweep updates `J` (singular value thresholding), `alpha` (a linear solve
//! against the cached Gram inverse), `e` (soft-thresholding), then the two
//! multipliers and the penalty `mu`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::prox::{axpy_mat, correlation_regularizer, scale_columns, shrink, svt_unchecked};
use crate::types::{CodingResult, Query, SolverOptions};

/// Cached `A = (X^T X + Diag(diag(X^T X)))^-1`.
///
/// Computed once per dictionary and shared read-only by every solve against it.
#[derive(Debug, Clone)]
pub struct GramInverse(DMatrix<f64>);

impl GramInverse {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

pub fn precompute_gram(x: &DMatrix<f64>) -> Result<GramInverse> {
    let mut gram = x.tr_mul(x);
    for j in 0..gram.ncols() {
        let d = gram[(j, j)];
        if !(d > 0.0) {
            return Err(Error::ZeroColumn { index: j });
        }
        gram[(j, j)] = 2.0 * d;
    }
    let chol = gram.cholesky().ok_or(Error::SingularGram)?;
    let inv = chol.inverse();
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularGram);
    }
    Ok(GramInverse(inv))
}

/// Iterates of the alternating-direction method.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub j: DMatrix<f64>,
    pub alpha: DVector<f64>,
    pub e: DVector<f64>,
    pub y1: DVector<f64>,
    pub y2: DMatrix<f64>,
    pub mu: f64,
}

impl SolverState {
    /// All-zero primal and dual variables.
    pub fn zeros(m: usize, n: usize, mu: f64) -> Self {
        Self {
            j: DMatrix::zeros(m, n),
            alpha: DVector::zeros(n),
            e: DVector::zeros(m),
            y1: DVector::zeros(m),
            y2: DMatrix::zeros(m, n),
            mu,
        }
    }

    fn check_shapes(&self, x: &DMatrix<f64>) -> Result<()> {
        let (m, n) = x.shape();
        let ok = self.j.shape() == (m, n)
            && self.y2.shape() == (m, n)
            && self.alpha.len() == n
            && self.e.len() == m
            && self.y1.len() == m;
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: n,
                actual: self.alpha.len(),
                context: "solver state vs dictionary",
            })
        }
    }

    fn is_finite(&self) -> bool {
        self.alpha.iter().all(|v| v.is_finite())
            && self.e.iter().all(|v| v.is_finite())
            && self.j.iter().all(|v| v.is_finite())
            && self.y1.iter().all(|v| v.is_finite())
            && self.y2.iter().all(|v| v.is_finite())
    }
}

/// `J`-step: `svt(X Diag(alpha) - Y2/mu, lambda/mu)`.
pub fn update_j(state: &SolverState, x: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    state.check_shapes(x)?;
    let mut target = scale_columns(x, &state.alpha)?;
    axpy_mat(&mut target, -1.0 / state.mu, &state.y2);
    if target.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite J-step target"));
    }
    let tau = lambda / state.mu;
    if tau >= target.norm() {
        // the spectral norm is bounded by the Frobenius norm
        return Ok(DMatrix::zeros(x.nrows(), x.ncols()));
    }
    svt_unchecked(&target, tau)
}

/// `alpha`-step: `A X^T (y1/mu + y - e) + A diag(X^T (Y2/mu + J))`.
pub fn update_alpha(
    state: &SolverState,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    gram: &GramInverse,
) -> Result<DVector<f64>> {
    state.check_shapes(x)?;
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: y.len(),
            context: "query vs dictionary feature dimension",
        });
    }
    if gram.0.nrows() != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            actual: gram.0.nrows(),
            context: "Gram inverse vs dictionary columns",
        });
    }
    let inv_mu = 1.0 / state.mu;
    let mut v = y - &state.e;
    v.axpy(inv_mu, &state.y1, 1.0);
    let mut rhs = x.tr_mul(&v);
    for (jdx, r) in rhs.iter_mut().enumerate() {
        let xc = x.column(jdx);
        *r += inv_mu * xc.dot(&state.y2.column(jdx)) + xc.dot(&state.j.column(jdx));
    }
    Ok(&gram.0 * rhs)
}

/// `e`-step: `soft_threshold(y - X alpha + y1/mu, 1/mu)`.
pub fn update_e(state: &SolverState, x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let inv_mu = 1.0 / state.mu;
    let mut v = y - x * &state.alpha;
    v.axpy(inv_mu, &state.y1, 1.0);
    v.apply(|t| *t = shrink(*t, inv_mu));
    v
}

/// `||y - X alpha||_1 + lambda ||X Diag(alpha)||_*`.
pub fn trace_lasso_objective(x: &DMatrix<f64>, y: &DVector<f64>, alpha: &DVector<f64>, lambda: f64) -> Result<f64> {
    let fit = (y - x * alpha).lp_norm(1);
    Ok(fit + lambda * correlation_regularizer(x, alpha)?)
}

/// A dictionary bound to its cached Gram inverse.
#[derive(Debug, Clone)]
pub struct TraceLassoSolver {
    x: DMatrix<f64>,
    gram: GramInverse,
}

impl TraceLassoSolver {
    pub fn new(x: &DMatrix<f64>) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite entry in dictionary"));
        }
        Ok(Self {
            gram: precompute_gram(x)?,
            x: x.clone(),
        })
    }

    pub fn dictionary(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn gram(&self) -> &GramInverse {
        &self.gram
    }

    pub fn solve(&self, y: &Query, opts: &SolverOptions) -> Result<CodingResult> {
        opts.validate()?;
        y.check_dim(self.x.nrows())?;
        let x = &self.x;
        let y = y.values();
        let (m, n) = x.shape();
        let mut state = SolverState::zeros(m, n, opts.mu0);
        let mut best: Option<(f64, DVector<f64>, DVector<f64>, (f64, f64))> = None;

        for iter in 1..=opts.max_iters {
            state.j = update_j(&state, x, opts.lambda).map_err(|_| Error::NumericalDivergence { iteration: iter })?;
            state.alpha = update_alpha(&state, x, y, &self.gram)?;
            state.e = update_e(&state, x, y);
            if !state.is_finite() {
                return Err(Error::NumericalDivergence { iteration: iter });
            }

            let x_alpha = x * &state.alpha;
            let r1 = y - &x_alpha - &state.e;
            let mut r2 = state.j.clone();
            for (jdx, mut col) in r2.column_iter_mut().enumerate() {
                col.axpy(-state.alpha[jdx], &x.column(jdx), 1.0);
            }
            state.y1.axpy(state.mu, &r1, 1.0);
            axpy_mat(&mut state.y2, state.mu, &r2);
            state.mu = (opts.rho * state.mu).min(opts.mu_max);

            let gaps = (r1.amax(), r2.amax());
            if !gaps.0.is_finite() || !gaps.1.is_finite() || !state.is_finite() {
                return Err(Error::NumericalDivergence { iteration: iter });
            }
            if gaps.0 <= opts.epsilon && gaps.1 <= opts.epsilon {
                return self.finish(y, state.alpha, state.e, iter, true, gaps, opts.lambda);
            }
            let worst = gaps.0.max(gaps.1);
            if best.as_ref().map_or(true, |b| worst < b.0) {
                best = Some((worst, state.alpha.clone(), state.e.clone(), gaps));
            }
        }

        let (_, alpha, e, gaps) = best.expect("max_iters >= 1");
        log::debug!(
            "trace-lasso solve hit max_iters={} with gaps {:?}",
            opts.max_iters,
            gaps
        );
        self.finish(y, alpha, e, opts.max_iters, false, gaps, opts.lambda)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        y: &DVector<f64>,
        alpha: DVector<f64>,
        noise: DVector<f64>,
        iterations: usize,
        converged: bool,
        primal_residuals: (f64, f64),
        lambda: f64,
    ) -> Result<CodingResult> {
        let objective = trace_lasso_objective(&self.x, y, &alpha, lambda)?;
        Ok(CodingResult {
            alpha,
            noise,
            iterations,
            converged,
            objective,
            primal_residuals,
        })
    }
}

/// One-shot solve; builds the Gram inverse for `x` on every call. Use
/// [`TraceLassoSolver`] to share it across queries.
pub fn solve_trace_lasso(x: &DMatrix<f64>, y: &Query, opts: &SolverOptions) -> Result<CodingResult> {
    TraceLassoSolver::new(x)?.solve(y, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::prox::trace_norm;

    fn normalized(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
        let mut x = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        for mut c in x.column_iter_mut() {
            let norm = c.norm();
            c /= norm;
        }
        x
    }

    fn random_state(rng: &mut ChaCha8Rng, m: usize, n: usize) -> SolverState {
        SolverState {
            j: DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0)),
            alpha: DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)),
            e: DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0)),
            y1: DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0)),
            y2: DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0)),
            mu: rng.random_range(0.5..3.0),
        }
    }

    #[test]
    fn gram_of_identity_and_orthonormal() {
        let a = precompute_gram(&DMatrix::identity(2, 2)).unwrap();
        assert!((a.matrix() - DMatrix::identity(2, 2) * 0.5).norm() < 1e-15);
        let q = DMatrix::from_column_slice(3, 2, &[0.6, 0.8, 0.0, 0.0, 0.0, 1.0]);
        let a = precompute_gram(&q).unwrap();
        assert!((a.matrix() - DMatrix::identity(2, 2) * 0.5).norm() < 1e-14);
    }

    #[test]
    fn gram_multiply_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = normalized(&mut rng, 6, 4);
        let a = precompute_gram(&x).unwrap();
        let g = x.tr_mul(&x) + DMatrix::identity(4, 4);
        assert!((a.matrix() * g - DMatrix::identity(4, 4)).amax() < 1e-10);
    }

    #[test]
    fn gram_rejects_zero_column() {
        let x = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(precompute_gram(&x), Err(Error::ZeroColumn { index: 1 })));
    }

    #[test]
    fn j_step_limit_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = normalized(&mut rng, 4, 3);
        let st = random_state(&mut rng, 4, 3);
        let mut expect = scale_columns(&x, &st.alpha).unwrap();
        axpy_mat(&mut expect, -1.0 / st.mu, &st.y2);
        assert!((update_j(&st, &x, 0.0).unwrap() - expect).amax() < 1e-12);

        let mut zero = st.clone();
        zero.y2 = scale_columns(&x, &zero.alpha).unwrap() * zero.mu;
        assert!(update_j(&zero, &x, 0.3).unwrap().amax() < 1e-12);
    }

    #[test]
    fn j_step_descends_subproblem() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = normalized(&mut rng, 5, 6);
        let lambda = 0.4;
        for _ in 0..20 {
            let st = random_state(&mut rng, 5, 6);
            let mut target = scale_columns(&x, &st.alpha).unwrap();
            axpy_mat(&mut target, -1.0 / st.mu, &st.y2);
            let sub = |j: &DMatrix<f64>| lambda / st.mu * trace_norm(j).unwrap() + 0.5 * (j - &target).norm_squared();
            let j_new = update_j(&st, &x, lambda).unwrap();
            assert!(sub(&j_new) <= sub(&st.j) + 1e-12);
        }
    }

    #[test]
    fn alpha_step_limit_cases() {
        let x = DMatrix::<f64>::identity(3, 3);
        let gram = precompute_gram(&x).unwrap();
        let st = SolverState::zeros(3, 3, 1.0);
        let zero = update_alpha(&st, &x, &DVector::zeros(3), &gram).unwrap();
        assert_eq!(zero, DVector::zeros(3));
        let b = dvector![1.0, -2.0, 4.0];
        let a = update_alpha(&st, &x, &b, &gram).unwrap();
        assert!((a - b * 0.5).amax() < 1e-15);
        assert!(update_alpha(&st, &x, &DVector::zeros(2), &gram).is_err());
    }

    #[test]
    fn alpha_step_is_stationary() {
        // gradient of the augmented Lagrangian in alpha, written out term by term
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (m, n) = (7, 5);
        let x = normalized(&mut rng, m, n);
        let y = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        let gram = precompute_gram(&x).unwrap();
        for _ in 0..10 {
            let mut st = random_state(&mut rng, m, n);
            st.alpha = update_alpha(&st, &x, &y, &gram).unwrap();
            let r1 = &y - &x * &st.alpha - &st.e;
            let r2 = &st.j - scale_columns(&x, &st.alpha).unwrap();
            let grad = DVector::from_fn(n, |j, _| {
                let xj = x.column(j);
                -xj.dot(&st.y1) - xj.dot(&st.y2.column(j)) - st.mu * xj.dot(&r1) - st.mu * xj.dot(&r2.column(j))
            });
            assert!(grad.norm() <= 1e-8, "gradient norm {}", grad.norm());
        }
    }

    #[test]
    fn e_step_cases() {
        let x = DMatrix::<f64>::identity(2, 2);
        let mut st = SolverState::zeros(2, 2, 1.0);
        st.alpha = dvector![0.5, -0.25];
        let y = dvector![0.5, -0.25];
        assert_eq!(update_e(&st, &x, &y), DVector::zeros(2));

        st.mu = 1e12;
        st.y1 = dvector![3.0, 1.0];
        let y = dvector![2.0, 2.0];
        let e = update_e(&st, &x, &y);
        let raw = &y - &x * &st.alpha + &st.y1 / st.mu;
        assert!((e - raw).amax() < 1e-11);
    }

    #[test]
    fn e_step_beats_random_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (m, n) = (6, 4);
        let x = normalized(&mut rng, m, n);
        let y = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        let st = random_state(&mut rng, m, n);
        let v = &y - &x * &st.alpha + &st.y1 / st.mu;
        let sub = |e: &DVector<f64>| e.lp_norm(1) / st.mu + 0.5 * (e - &v).norm_squared();
        let e = update_e(&st, &x, &y);
        let best = sub(&e);
        for i in 0..1000 {
            let scale = [0.01, 0.1, 1.0][i % 3];
            let cand = &e + DVector::from_fn(m, |_, _| rng.random_range(-scale..scale));
            assert!(best <= sub(&cand) + 1e-12);
        }
    }

    #[test]
    fn zero_query_converges_immediately() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = normalized(&mut rng, 5, 7);
        let y = Query::new(DVector::zeros(5)).unwrap();
        let res = solve_trace_lasso(&x, &y, &SolverOptions::default()).unwrap();
        assert!(res.converged);
        assert!(res.iterations <= 2);
        assert_eq!(res.objective, 0.0);
        assert!(res.alpha.amax() == 0.0 && res.noise.amax() == 0.0);
    }

    #[test]
    fn single_atom_exact_fit() {
        let x1 = dvector![0.6, 0.0, 0.8];
        let x = DMatrix::from_columns(&[x1.clone()]);
        let opts = SolverOptions::default().with_lambda(1e-4);
        let res = solve_trace_lasso(&x, &Query::new(x1.clone()).unwrap(), &opts).unwrap();
        assert!(res.converged);
        assert!((res.alpha[0] - 1.0).abs() < 1e-3);
        assert!(res.noise.amax() < 1e-3);
        assert!((&x1 - &x * &res.alpha).lp_norm(1) <= 1e-3);
    }

    #[test]
    fn max_iters_is_not_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = normalized(&mut rng, 6, 8);
        let y = Query::new(DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0))).unwrap();
        let mut opts = SolverOptions::default();
        opts.max_iters = 5;
        let res = solve_trace_lasso(&x, &y, &opts).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 5);
        assert!(res.objective >= 0.0);
    }

    #[test]
    fn solve_is_bitwise_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = normalized(&mut rng, 6, 9);
        let y = Query::new(DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0))).unwrap();
        let opts = SolverOptions::default().with_lambda(0.1);
        let a = solve_trace_lasso(&x, &y, &opts).unwrap();
        let b = solve_trace_lasso(&x, &y, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn huge_penalty_growth_diverges_or_converges_cleanly() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = normalized(&mut rng, 4, 5);
        let y = Query::new(DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0))).unwrap();
        let mut opts = SolverOptions::default();
        opts.mu0 = 1e300;
        opts.mu_max = f64::MAX;
        opts.rho = 1e10;
        match solve_trace_lasso(&x, &y, &opts) {
            Ok(res) => assert!(res.alpha.iter().all(|v| v.is_finite())),
            Err(Error::NumericalDivergence { .. }) => {}
            Err(other) => panic!("unexpected error {other:?}"),
        }
    }
}
