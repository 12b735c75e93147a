//! Residual-based classifiers: ASRC (trace-Lasso coding) and the NN, NFS, SRC
//! and CRC baselines.
//!
//! Every classifier produces one residual per class and predicts the class with
//! the smallest residual, breaking ties towards the smallest class id. Queries
//! are never rescaled.

use std::fmt;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lasso::{LassoOptions, LassoSolver};
use crate::solver::TraceLassoSolver;
use crate::types::{CodingResult, Dictionary, Query, SolverOptions};

/// Relative cutoff on `|R_ii|` for rank decisions in the NFS subspace solve.
pub const NFS_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class_id: usize,
    pub residuals: Vec<f64>,
    pub coding: Option<CodingResult>,
}

impl Prediction {
    fn from_residuals(residuals: Vec<f64>, coding: Option<CodingResult>) -> Result<Self> {
        if residuals.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::invalid("class residuals must be finite and non-negative"));
        }
        let class_id = argmin(&residuals).ok_or(Error::EmptyDataset)?;
        Ok(Self {
            class_id,
            residuals,
            coding,
        })
    }
}

/// Index of the smallest value; the first one wins ties.
pub fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.map_or(true, |(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// `r_k = ||y - X_k alpha_k||_2` for every class `k`.
pub fn class_residuals(dict: &Dictionary, alpha: &DVector<f64>, y: &Query) -> Result<Vec<f64>> {
    y.check_dim(dict.dim())?;
    if alpha.len() != dict.len() {
        return Err(Error::DimensionMismatch {
            expected: dict.len(),
            actual: alpha.len(),
            context: "coefficients vs dictionary columns",
        });
    }
    let x = dict.data();
    (0..dict.num_classes())
        .map(|k| {
            let mut r = y.values().clone();
            for &j in dict.class_columns(k)? {
                if alpha[j] != 0.0 {
                    r.axpy(-alpha[j], &x.column(j), 1.0);
                }
            }
            Ok(r.norm())
        })
        .collect()
}

/// Classifier family and its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Method {
    Asrc {
        #[serde(flatten)]
        opts: SolverOptions,
        /// Score classes on `y - e` instead of `y`, discounting the entries
        /// the l1 fit marked as gross errors.
        #[serde(default)]
        denoise: bool,
    },
    Src {
        lambda: f64,
        #[serde(default)]
        opts: LassoOptions,
    },
    Crc {
        sigma: f64,
    },
    Nn,
    Nfs,
}

impl Method {
    pub const DEFAULT_SRC_LAMBDA: f64 = 1e-3;
    pub const DEFAULT_CRC_SIGMA: f64 = 1e-2;

    pub fn asrc(lambda: f64) -> Self {
        Method::Asrc {
            opts: SolverOptions::default().with_lambda(lambda),
            denoise: false,
        }
    }

    pub fn src(lambda: f64) -> Self {
        Method::Src {
            lambda,
            opts: LassoOptions::default(),
        }
    }

    pub fn crc(sigma: f64) -> Self {
        Method::Crc { sigma }
    }

    pub fn kind(&self) -> MethodKind {
        match self {
            Method::Asrc { .. } => MethodKind::Asrc,
            Method::Src { .. } => MethodKind::Src,
            Method::Crc { .. } => MethodKind::Crc,
            Method::Nn => MethodKind::Nn,
            Method::Nfs => MethodKind::Nfs,
        }
    }

    /// The regularization weight, if the method has one.
    pub fn weight(&self) -> Option<f64> {
        match *self {
            Method::Asrc { opts, .. } => Some(opts.lambda),
            Method::Src { lambda, .. } => Some(lambda),
            Method::Crc { sigma } => Some(sigma),
            Method::Nn | Method::Nfs => None,
        }
    }

    /// Same method with its regularization weight replaced.
    pub fn with_weight(self, w: f64) -> Self {
        match self {
            Method::Asrc { opts, denoise } => Method::Asrc {
                opts: opts.with_lambda(w),
                denoise,
            },
            Method::Src { opts, .. } => Method::Src { lambda: w, opts },
            Method::Crc { .. } => Method::Crc { sigma: w },
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Asrc,
    Src,
    Crc,
    Nn,
    Nfs,
}

impl MethodKind {
    pub const ALL: [MethodKind; 5] = [
        MethodKind::Nn,
        MethodKind::Nfs,
        MethodKind::Src,
        MethodKind::Crc,
        MethodKind::Asrc,
    ];

    pub fn default_method(self) -> Method {
        match self {
            MethodKind::Asrc => Method::asrc(SolverOptions::default().lambda),
            MethodKind::Src => Method::src(Method::DEFAULT_SRC_LAMBDA),
            MethodKind::Crc => Method::crc(Method::DEFAULT_CRC_SIGMA),
            MethodKind::Nn => Method::Nn,
            MethodKind::Nfs => Method::Nfs,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Asrc => "asrc",
            MethodKind::Src => "src",
            MethodKind::Crc => "crc",
            MethodKind::Nn => "nn",
            MethodKind::Nfs => "nfs",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "asrc" => Ok(MethodKind::Asrc),
            "src" => Ok(MethodKind::Src),
            "crc" => Ok(MethodKind::Crc),
            "nn" => Ok(MethodKind::Nn),
            "nfs" => Ok(MethodKind::Nfs),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
enum Engine {
    Asrc(TraceLassoSolver, SolverOptions, bool),
    Src(LassoSolver, f64),
    Crc(Cholesky<f64, Dyn>),
    Nn,
    /// Orthonormal basis of each class span.
    Nfs(Vec<DMatrix<f64>>),
}

/// A classifier bound to a dictionary, with all per-dictionary factorizations
/// computed up front. Immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct FittedClassifier {
    dict: Dictionary,
    method: Method,
    engine: Engine,
}

impl FittedClassifier {
    /// ASRC, SRC and CRC code over the column-normalized dictionary; NN and
    /// NFS use it as given.
    pub fn fit(dict: &Dictionary, method: Method) -> Result<Self> {
        let (dict, engine) = match method {
            Method::Asrc { opts, denoise } => {
                opts.validate()?;
                let d = dict.normalize_columns()?;
                let solver = TraceLassoSolver::new(d.data())?;
                (d, Engine::Asrc(solver, opts, denoise))
            }
            Method::Src { lambda, opts } => {
                if !(lambda >= 0.0 && lambda.is_finite()) {
                    return Err(Error::Config(format!("SRC lambda must be >= 0, got {lambda}")));
                }
                let d = dict.normalize_columns()?;
                let solver = LassoSolver::new(d.data(), opts)?;
                (d, Engine::Src(solver, lambda))
            }
            Method::Crc { sigma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::Config(format!("CRC sigma must be > 0, got {sigma}")));
                }
                let d = dict.normalize_columns()?;
                let n = d.len();
                let gram = d.data().tr_mul(d.data()) + DMatrix::identity(n, n) * sigma;
                let chol = gram.cholesky().ok_or(Error::SingularGram)?;
                (d, Engine::Crc(chol))
            }
            Method::Nn => (dict.clone(), Engine::Nn),
            Method::Nfs => {
                let bases = (0..dict.num_classes())
                    .map(|k| class_basis(&dict.data().select_columns(dict.class_columns(k)?)))
                    .collect::<Result<Vec<_>>>()?;
                (dict.clone(), Engine::Nfs(bases))
            }
        };
        Ok(Self { dict, method, engine })
    }

    pub fn method(&self) -> &Method {
        &self.method
    }

    /// The dictionary actually coded against (normalized for ASRC/SRC/CRC).
    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    pub fn classify(&self, y: &Query) -> Result<Prediction> {
        y.check_dim(self.dict.dim())?;
        let x = self.dict.data();
        match &self.engine {
            Engine::Asrc(solver, opts, denoise) => {
                let coding = solver.solve(y, opts)?;
                let residuals = if *denoise {
                    class_residuals(&self.dict, &coding.alpha, &Query::new(y.values() - &coding.noise)?)?
                } else {
                    class_residuals(&self.dict, &coding.alpha, y)?
                };
                Prediction::from_residuals(residuals, Some(coding))
            }
            Engine::Src(solver, lambda) => {
                let sol = solver.solve(y.values(), *lambda)?;
                let coding = representation(x, y, sol.alpha, sol.iterations, sol.converged, sol.objective);
                let residuals = class_residuals(&self.dict, &coding.alpha, y)?;
                Prediction::from_residuals(residuals, Some(coding))
            }
            Engine::Crc(chol) => {
                let alpha = chol.solve(&x.tr_mul(y.values()));
                let Method::Crc { sigma } = self.method else {
                    unreachable!("CRC engine with non-CRC method")
                };
                let objective = (y.values() - x * &alpha).norm_squared() + sigma * alpha.norm_squared();
                let coding = representation(x, y, alpha, 1, true, objective);
                let residuals = class_residuals(&self.dict, &coding.alpha, y)?;
                Prediction::from_residuals(residuals, Some(coding))
            }
            Engine::Nn => {
                let mut residuals = vec![f64::INFINITY; self.dict.num_classes()];
                for (j, col) in x.column_iter().enumerate() {
                    let d = (y.values() - col).norm();
                    let k = self.dict.labels()[j];
                    if d < residuals[k] {
                        residuals[k] = d;
                    }
                }
                Prediction::from_residuals(residuals, None)
            }
            Engine::Nfs(bases) => {
                let residuals = bases
                    .iter()
                    .map(|q| {
                        let proj = q * q.tr_mul(y.values());
                        (y.values() - proj).norm()
                    })
                    .collect();
                Prediction::from_residuals(residuals, None)
            }
        }
    }
}

fn representation(
    x: &DMatrix<f64>,
    y: &Query,
    alpha: DVector<f64>,
    iterations: usize,
    converged: bool,
    objective: f64,
) -> CodingResult {
    let noise = y.values() - x * &alpha;
    CodingResult {
        alpha,
        noise,
        iterations,
        converged,
        objective,
        primal_residuals: (0.0, 0.0),
    }
}

/// Orthonormal basis for the column span of `xk` from a column-pivoted QR.
fn class_basis(xk: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let qr = xk.clone().col_piv_qr();
    let r = qr.r();
    let lead = r[(0, 0)].abs();
    let diag = r.nrows().min(r.ncols());
    let rank = if lead == 0.0 {
        0
    } else {
        (0..diag).take_while(|&i| r[(i, i)].abs() > NFS_RANK_TOL * lead).count()
    };
    let q = qr.q();
    Ok(q.columns(0, rank).into_owned())
}

pub fn asrc_classify(dict: &Dictionary, y: &Query, opts: &SolverOptions) -> Result<Prediction> {
    FittedClassifier::fit(
        dict,
        Method::Asrc {
            opts: *opts,
            denoise: false,
        },
    )?
    .classify(y)
}

pub fn src_classify(dict: &Dictionary, y: &Query, lambda_l1: f64, opts: &LassoOptions) -> Result<Prediction> {
    FittedClassifier::fit(
        dict,
        Method::Src {
            lambda: lambda_l1,
            opts: *opts,
        },
    )?
    .classify(y)
}

pub fn crc_classify(dict: &Dictionary, y: &Query, sigma: f64) -> Result<Prediction> {
    FittedClassifier::fit(dict, Method::Crc { sigma })?.classify(y)
}

pub fn nn_classify(dict: &Dictionary, y: &Query) -> Result<Prediction> {
    FittedClassifier::fit(dict, Method::Nn)?.classify(y)
}

pub fn nfs_classify(dict: &Dictionary, y: &Query) -> Result<Prediction> {
    FittedClassifier::fit(dict, Method::Nfs)?.classify(y)
}
