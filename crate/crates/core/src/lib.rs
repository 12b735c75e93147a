//! Adaptive sparse representation classification.
//!
//! Codes a query over a dictionary of training samples with the trace-Lasso
//! model `min ||y - X alpha||_1 + lambda ||X Diag(alpha)||_*` and assigns the
//! class with the smallest class-restricted reconstruction residual. The
//! correlation regularizer behaves like the l1-norm on uncorrelated
//! dictionaries and like the l2-norm on highly correlated ones.
//!
//! Besides the solver and the classifier the crate ships the usual
//! representation-based baselines (NN, NFS, SRC, CRC), PCA features and a
//! benchmark harness (`bench` binary).

pub mod classify;
pub mod error;
pub mod experiments;
pub mod lasso;
pub mod pca;
pub mod properties;
pub mod prox;
pub mod solver;
pub mod types;

pub use error::{Error, ErrorKind, Result};
pub use types::{CodingResult, Dictionary, Query, SolverOptions};
