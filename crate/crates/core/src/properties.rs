//! Self-checks of the analytic properties the classifier relies on, run by
//! `bench properties`. Each check samples random instances from a seeded RNG.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::experiments::split::kfold;
use crate::prox::{correlation_regularizer, soft_threshold, svt};
use crate::solver::solve_trace_lasso;
use crate::types::{Query, SolverOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn normalized(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut x = gaussian(rows, cols, rng);
    for mut c in x.column_iter_mut() {
        c.normalize_mut();
    }
    x
}

fn check(name: &'static str, trials: usize, mut worst: impl FnMut() -> Result<f64>, tol: f64) -> PropertyCheck {
    let mut max: f64 = 0.0;
    for _ in 0..trials {
        match worst() {
            Ok(v) => max = max.max(v),
            Err(e) => {
                return PropertyCheck {
                    name,
                    passed: false,
                    detail: e.to_string(),
                }
            }
        }
    }
    PropertyCheck {
        name,
        passed: max <= tol,
        detail: format!("{trials} trials, worst violation {max:.3e} (tolerance {tol:.0e})"),
    }
}

/// Runs every check; `scale` multiplies the trial counts.
pub fn run_properties(seed: u64, scale: usize) -> Vec<PropertyCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = scale.max(1);
    let mut out = Vec::new();

    out.push(check(
        "l2 <= regularizer <= l1 on normalized dictionaries",
        100 * scale,
        || {
            let (m, n) = (rng.random_range(4..=32), rng.random_range(4..=64));
            let x = normalized(m, n, &mut rng);
            let a = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
            let r = correlation_regularizer(&x, &a)?;
            Ok((a.norm() - r).max(r - a.lp_norm(1)).max(0.0))
        },
        1e-9,
    ));

    out.push(check(
        "regularizer equals l1 on orthonormal columns",
        50 * scale,
        || {
            let n = rng.random_range(2..=12);
            let m = n + rng.random_range(0..=8);
            let q = gaussian(m, n, &mut rng).qr().q();
            let a = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
            let l1 = a.lp_norm(1);
            Ok((correlation_regularizer(&q, &a)? - l1).abs() / l1)
        },
        1e-8,
    ));

    out.push(check(
        "regularizer equals l2 on identical columns",
        50 * scale,
        || {
            let (m, n) = (rng.random_range(2..=16), rng.random_range(2..=16));
            let x1 = normalized(m, 1, &mut rng);
            let x = DMatrix::from_fn(m, n, |i, _| x1[(i, 0)]);
            let a = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
            Ok((correlation_regularizer(&x, &a)? - a.norm()).abs() / a.norm())
        },
        1e-8,
    ));

    out.push(check(
        "singular value thresholding is non-expansive",
        50 * scale,
        || {
            let (m, n) = (rng.random_range(2..=10), rng.random_range(2..=10));
            let a = gaussian(m, n, &mut rng);
            let b = gaussian(m, n, &mut rng);
            let tau = rng.random_range(0.0..2.0);
            let d = (svt(&a, tau)? - svt(&b, tau)?).norm();
            Ok((d - (a - b).norm()).max(0.0))
        },
        1e-10,
    ));

    out.push(check(
        "soft thresholding is non-expansive",
        100 * scale,
        || {
            let n = rng.random_range(1..=20);
            let a = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let b = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let tau = rng.random_range(0.0..2.0);
            let d = (soft_threshold(&a, tau)? - soft_threshold(&b, tau)?).norm();
            Ok((d - (a - b).norm()).max(0.0))
        },
        1e-12,
    ));

    out.push(check(
        "solver converges with small constraint gaps",
        10 * scale,
        || {
            let x = normalized(20, 30, &mut rng);
            let y = Query::new(DVector::from_fn(20, |_, _| rng.sample(StandardNormal)))?;
            let res = solve_trace_lasso(&x, &y, &SolverOptions::default())?;
            let gap = res.primal_residuals.0.max(res.primal_residuals.1);
            Ok(if res.converged && res.iterations <= 5000 {
                gap
            } else {
                f64::INFINITY
            })
        },
        1e-6,
    ));

    out.push(check(
        "k-fold splits partition the samples",
        20 * scale,
        || {
            let n = rng.random_range(10..=60);
            let classes = rng.random_range(1..=4);
            let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
            let k = rng.random_range(2..=10);
            let folds = kfold(&labels, classes, k, rng.random())?;
            let mut seen = vec![0usize; n];
            for f in &folds {
                for &i in &f.test {
                    seen[i] += 1;
                }
                if f.train.iter().any(|i| f.test.binary_search(i).is_ok()) {
                    return Ok(1.0);
                }
            }
            Ok(if seen.iter().all(|&c| c == 1) { 0.0 } else { 1.0 })
        },
        0.0,
    ));

    out
}
