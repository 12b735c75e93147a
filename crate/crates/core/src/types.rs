//! Shared data model: dictionaries, queries, solver configuration and coding results.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column norms below this are treated as zero by [`Dictionary::normalize_columns`].
pub const ZERO_NORM_TOL: f64 = 1e-12;

/// Training samples stored as columns, each tagged with a dense class id in `0..K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    data: DMatrix<f64>,
    labels: Vec<usize>,
    class_index: Vec<Vec<usize>>,
}

impl Dictionary {
    /// Builds a dictionary. Class ids must be dense: every id below the largest one
    /// needs at least one column.
    pub fn new(data: DMatrix<f64>, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != data.ncols() {
            return Err(Error::DimensionMismatch {
                expected: data.ncols(),
                actual: labels.len(),
                context: "labels vs dictionary columns",
            });
        }
        if data.ncols() == 0 || data.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if let Some((idx, _)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite entry in dictionary column {}",
                idx / data.nrows()
            )));
        }
        let num_classes = labels.iter().max().map_or(0, |&k| k + 1);
        let mut class_index = vec![Vec::new(); num_classes];
        for (col, &k) in labels.iter().enumerate() {
            class_index[k].push(col);
        }
        if let Some(k) = class_index.iter().position(Vec::is_empty) {
            return Err(Error::invalid(format!("class id {k} has no columns")));
        }
        Ok(Self {
            data,
            labels,
            class_index,
        })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Feature dimension `m`.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Number of atoms `n`.
    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn num_classes(&self) -> usize {
        self.class_index.len()
    }

    /// Column indices of class `k`, in dictionary order.
    pub fn class_columns(&self, k: usize) -> Result<&[usize]> {
        self.class_index.get(k).map(Vec::as_slice).ok_or(Error::UnknownClass(k))
    }

    /// Divides every column by its l2-norm.
    pub fn normalize_columns(&self) -> Result<Dictionary> {
        let mut data = self.data.clone();
        for (index, mut col) in data.column_iter_mut().enumerate() {
            let norm = col.norm();
            if norm < ZERO_NORM_TOL {
                return Err(Error::ZeroColumn { index });
            }
            col /= norm;
        }
        Ok(Dictionary {
            data,
            labels: self.labels.clone(),
            class_index: self.class_index.clone(),
        })
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        self.data.column_iter().all(|c| (c.norm() - 1.0).abs() <= tol)
    }

    /// The block `X_k` and the matching coefficients `alpha_k`.
    pub fn class_slice(&self, alpha: &DVector<f64>, k: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
        if alpha.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: alpha.len(),
                context: "coefficients vs dictionary columns",
            });
        }
        let cols = self.class_columns(k)?;
        let block = self.data.select_columns(cols);
        let coeffs = DVector::from_iterator(cols.len(), cols.iter().map(|&j| alpha[j]));
        Ok((block, coeffs))
    }
}

/// A query sample `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Query(DVector<f64>);

impl Query {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite entry in query"));
        }
        Ok(Self(values))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(values))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn check_dim(&self, m: usize) -> Result<()> {
        if self.0.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: self.0.len(),
                context: "query vs dictionary feature dimension",
            });
        }
        Ok(())
    }
}

/// Configuration of the trace-Lasso ADM solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Weight of the correlation regularizer.
    pub lambda: f64,
    pub mu0: f64,
    /// Growth factor of `mu` per sweep. Values close to 1 take more sweeps
    /// but stop closer to the minimizer; fast growth can freeze the iterates
    /// at a feasible point with a visibly larger objective.
    pub rho: f64,
    pub mu_max: f64,
    /// Infinity-norm feasibility tolerance for both constraints.
    pub epsilon: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            mu0: 1e-6,
            rho: 1.1,
            mu_max: 1e10,
            epsilon: 1e-8,
            max_iters: 10_000,
        }
    }
}

impl SolverOptions {
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("lambda", self.lambda)?;
        positive("mu0", self.mu0)?;
        positive("epsilon", self.epsilon)?;
        positive("mu_max", self.mu_max)?;
        if !(self.rho > 1.0) || !self.rho.is_finite() {
            return Err(Error::Config(format!("rho must exceed 1, got {}", self.rho)));
        }
        if self.mu_max < self.mu0 {
            return Err(Error::Config("mu_max must be at least mu0".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Output of a coding solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CodingResult {
    pub alpha: DVector<f64>,
    /// Sparse noise estimate `e`.
    pub noise: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Model objective evaluated at the returned coefficients.
    pub objective: f64,
    /// Final `(||y - X alpha - e||_inf, ||J - X Diag(alpha)||_inf)`.
    pub primal_residuals: (f64, f64),
}

impl CodingResult {
    /// Number of coefficients with magnitude above `threshold`.
    pub fn nnz(&self, threshold: f64) -> usize {
        self.alpha.iter().filter(|a| a.abs() > threshold).count()
    }
}
