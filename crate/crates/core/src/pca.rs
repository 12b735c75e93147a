//! PCA feature extraction for image datasets.
//!
//! A fitted [`PcaModel`] serializes to JSON with matrices packed as base64
//! little-endian `f64` buffers; see `docs/pca-model.md` for the schema.

use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    /// `m x d`, orthonormal columns.
    pub basis: DMatrix<f64>,
    /// Covariance eigenvalues of the kept directions, descending.
    pub explained: DVector<f64>,
}

/// Fits PCA on training columns `train` (`m x n`), keeping `d` directions.
///
/// `d` must lie in `1..=min(m, n - 1)`. Each basis vector is signed so that its
/// largest-magnitude entry is positive.
pub fn fit_pca(train: &DMatrix<f64>, d: usize) -> Result<PcaModel> {
    let (m, n) = train.shape();
    let max = m.min(n.saturating_sub(1));
    if d == 0 || d > max {
        return Err(Error::InvalidDimension { requested: d, max });
    }
    if train.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite training data"));
    }
    let mean = train.column_mean();
    let mut centered = train.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let scale = 1.0 / (n as f64 - 1.0);

    // Eigen-decompose whichever Gram matrix is smaller.
    let (values, vectors) = if m <= n {
        let cov = (&centered * centered.transpose()) * scale;
        let eig = cov.symmetric_eigen();
        (eig.eigenvalues, eig.eigenvectors)
    } else {
        let small = (centered.transpose() * &centered) * scale;
        let eig = small.symmetric_eigen();
        let mut vecs = &centered * &eig.eigenvectors;
        for (i, mut col) in vecs.column_iter_mut().enumerate() {
            let norm = col.norm();
            if norm > 0.0 && eig.eigenvalues[i] > 0.0 {
                col /= norm;
            }
        }
        (eig.eigenvalues, vecs)
    };

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let keep = &order[..d];
    let mut basis = vectors.select_columns(keep);
    for mut col in basis.column_iter_mut() {
        let pivot = col
            .iter()
            .cloned()
            .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
    let explained = DVector::from_iterator(d, keep.iter().map(|&i| values[i].max(0.0)));
    Ok(PcaModel { mean, basis, explained })
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `basis^T (x - mean)` for every column of `samples`.
    pub fn project(&self, samples: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if samples.nrows() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: samples.nrows(),
                context: "samples vs PCA input dimension",
            });
        }
        let mut centered = samples.clone();
        for mut col in centered.column_iter_mut() {
            col -= &self.mean;
        }
        Ok(self.basis.tr_mul(&centered))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&PcaModelFile::from(self)).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PcaModelFile = serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))?;
        file.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct PackedMatrix {
    rows: usize,
    cols: usize,
    /// Column-major little-endian f64.
    data: String,
}

impl PackedMatrix {
    fn pack(rows: usize, cols: usize, values: &[f64]) -> Self {
        let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        Self {
            rows,
            cols,
            data: B64.encode(bytes),
        }
    }

    fn unpack(&self) -> Result<Vec<f64>> {
        let bytes = B64.decode(&self.data).map_err(|e| Error::Serde(e.to_string()))?;
        if bytes.len() != self.rows * self.cols * 8 {
            return Err(Error::Serde(format!(
                "packed matrix holds {} bytes, expected {}",
                bytes.len(),
                self.rows * self.cols * 8
            )));
        }
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    }
}

#[derive(Serialize, Deserialize)]
struct PcaModelFile {
    format: String,
    mean: PackedMatrix,
    basis: PackedMatrix,
    explained: PackedMatrix,
}

const PCA_FORMAT: &str = "asrc-pca-v1";

impl From<&PcaModel> for PcaModelFile {
    fn from(m: &PcaModel) -> Self {
        Self {
            format: PCA_FORMAT.to_string(),
            mean: PackedMatrix::pack(m.mean.len(), 1, m.mean.as_slice()),
            basis: PackedMatrix::pack(m.basis.nrows(), m.basis.ncols(), m.basis.as_slice()),
            explained: PackedMatrix::pack(m.explained.len(), 1, m.explained.as_slice()),
        }
    }
}

impl TryFrom<PcaModelFile> for PcaModel {
    type Error = Error;

    fn try_from(f: PcaModelFile) -> Result<Self> {
        if f.format != PCA_FORMAT {
            return Err(Error::Serde(format!("unsupported PCA model format '{}'", f.format)));
        }
        let mean = DVector::from_vec(f.mean.unpack()?);
        let basis = DMatrix::from_vec(f.basis.rows, f.basis.cols, f.basis.unpack()?);
        let explained = DVector::from_vec(f.explained.unpack()?);
        if basis.nrows() != mean.len() || explained.len() != basis.ncols() {
            return Err(Error::Serde("inconsistent PCA model dimensions".into()));
        }
        Ok(PcaModel { mean, basis, explained })
    }
}
