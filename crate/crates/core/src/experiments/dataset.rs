//! Labeled datasets and their on-disk formats.
//!
//! CSV: one sample per row, a header row, one label column (any text), all
//! other columns numeric. Empty cells and `?`/`NA`/`NaN` are missing values.
//!
//! Packed image matrix (little-endian):
//!
//! ```text
//! bytes 0..4    magic "AIMG"
//! bytes 4..8    u32 N  (number of images)
//! bytes 8..12   u32 h
//! bytes 12..16  u32 w
//! then          N * h * w u8 pixels, image after image, each row-major
//! then          N u32 labels
//! ```
//!
//! Pixels are scaled by 1/255 on load.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Dictionary, Query};

pub const IMAGE_MAGIC: &[u8; 4] = b"AIMG";

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    /// `m x N`, samples as columns.
    pub features: DMatrix<f64>,
    /// Dense class ids in `0..class_names.len()`.
    pub labels: Vec<usize>,
    /// Original label text for each class id.
    pub class_names: Vec<String>,
    /// `(height, width)` for image data; `height * width == m`.
    pub geometry: Option<(usize, usize)>,
}

impl LabeledDataset {
    pub fn new(
        name: impl Into<String>,
        features: DMatrix<f64>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        geometry: Option<(usize, usize)>,
    ) -> Result<Self> {
        if labels.len() != features.ncols() {
            return Err(Error::DimensionMismatch {
                expected: features.ncols(),
                actual: labels.len(),
                context: "labels vs samples",
            });
        }
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(&bad) = labels.iter().find(|&&k| k >= class_names.len()) {
            return Err(Error::UnknownClass(bad));
        }
        if let Some((h, w)) = geometry {
            if h * w != features.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: features.nrows(),
                    actual: h * w,
                    context: "image geometry vs feature dimension",
                });
            }
        }
        Ok(Self {
            name: name.into(),
            features,
            labels,
            class_names,
            geometry,
        })
    }

    pub fn len(&self) -> usize {
        self.features.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.features.ncols() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Samples at `indices`, in that order. The class id space is kept.
    pub fn select(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            name: self.name.clone(),
            features: self.features.select_columns(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            geometry: self.geometry,
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &k in &self.labels {
            counts[k] += 1;
        }
        counts
    }

    /// Dictionary over all samples; every class must be present.
    pub fn to_dictionary(&self) -> Result<Dictionary> {
        Dictionary::new(self.features.clone(), self.labels.clone())
    }

    pub fn query(&self, i: usize) -> Result<Query> {
        Query::new(self.features.column(i).into_owned())
    }
}

/// Which CSV column holds the label. Serialized as `"last"`, a 0-based index,
/// or a header name.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "LabelRepr", into = "LabelRepr")]
pub enum LabelColumn {
    #[default]
    Last,
    Index(usize),
    Name(String),
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum LabelRepr {
    Index(usize),
    Text(String),
}

impl From<LabelRepr> for LabelColumn {
    fn from(r: LabelRepr) -> Self {
        match r {
            LabelRepr::Index(i) => LabelColumn::Index(i),
            LabelRepr::Text(s) => LabelColumn::parse(&s),
        }
    }
}

impl From<LabelColumn> for LabelRepr {
    fn from(c: LabelColumn) -> Self {
        match c {
            LabelColumn::Last => LabelRepr::Text("last".into()),
            LabelColumn::Index(i) => LabelRepr::Index(i),
            LabelColumn::Name(s) => LabelRepr::Text(s),
        }
    }
}

impl LabelColumn {
    pub fn parse(spec: &str) -> Self {
        match spec {
            "last" => LabelColumn::Last,
            "first" => LabelColumn::Index(0),
            s => s
                .parse()
                .map_or_else(|_| LabelColumn::Name(s.to_string()), LabelColumn::Index),
        }
    }

    fn resolve(&self, header: &csv::StringRecord) -> Result<usize> {
        let ncols = header.len();
        if ncols < 2 {
            return Err(Error::Parse {
                row: 1,
                col: 1,
                msg: "need at least one feature column and one label column".into(),
            });
        }
        match self {
            LabelColumn::Last => Ok(ncols - 1),
            LabelColumn::Index(i) if *i < ncols => Ok(*i),
            LabelColumn::Index(i) => Err(Error::Config(format!(
                "label column {i} out of range ({ncols} columns)"
            ))),
            LabelColumn::Name(name) => header
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Config(format!("no column named '{name}'"))),
        }
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "?" | "NA" | "na" | "NaN" | "nan")
}

/// Dense ids for label strings: numeric labels in numeric order, otherwise
/// lexicographic.
fn densify(raw: &[String]) -> (Vec<usize>, Vec<String>) {
    let unique: BTreeSet<&str> = raw.iter().map(String::as_str).collect();
    let mut names: Vec<String> = unique.into_iter().map(str::to_string).collect();
    if names.iter().all(|s| s.parse::<f64>().is_ok()) {
        names.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    }
    let labels = raw
        .iter()
        .map(|s| names.iter().position(|n| n == s).expect("label present"))
        .collect();
    (labels, names)
}

/// Loads a CSV file; rows become columns of the feature matrix. Row and column
/// numbers in errors are 1-based, the header being row 1.
pub fn load_csv(path: &Path, label_column: &LabelColumn) -> Result<LabeledDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_csv(&text, label_column, name)
}

pub fn parse_csv(text: &str, label_column: &LabelColumn, name: String) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Parse {
            row: 1,
            col: 0,
            msg: e.to_string(),
        })?
        .clone();
    if header.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let label_idx = label_column.resolve(&header)?;
    let m = header.len() - 1;

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Parse {
            row,
            col: 0,
            msg: e.to_string(),
        })?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != header.len() {
            return Err(Error::Parse {
                row,
                col: record.len().min(header.len()) + 1,
                msg: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            if c == label_idx {
                if is_missing(cell) {
                    return Err(Error::MissingValue { row, col: c + 1 });
                }
                raw_labels.push(cell.to_string());
                continue;
            }
            if is_missing(cell) {
                return Err(Error::MissingValue { row, col: c + 1 });
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                col: c + 1,
                msg: format!("not a number: '{cell}'"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    col: c + 1,
                    msg: "non-finite value".into(),
                });
            }
            values.push(v);
        }
    }
    if raw_labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = raw_labels.len();
    let features = DMatrix::from_vec(m, n, values);
    let (labels, class_names) = densify(&raw_labels);
    LabeledDataset::new(name, features, labels, class_names, None)
}

/// Writes `ds` as CSV with feature columns `f0..f{m-1}` and a trailing `label`.
pub fn write_csv(ds: &LabeledDataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let mut header: Vec<String> = (0..ds.dim()).map(|i| format!("f{i}")).collect();
    header.push("label".into());
    w.write_record(&header).map_err(|e| Error::io(path, e.into()))?;
    for (j, col) in ds.features.column_iter().enumerate() {
        let mut rec: Vec<String> = col.iter().map(|v| format!("{v:?}")).collect();
        rec.push(ds.class_names[ds.labels[j]].clone());
        w.write_record(&rec).map_err(|e| Error::io(path, e.into()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_image_matrix(path: &Path) -> Result<LabeledDataset> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    decode_image_matrix(&bytes, name)
}

pub fn decode_image_matrix(bytes: &[u8], name: String) -> Result<LabeledDataset> {
    if bytes.len() < 16 {
        return Err(Error::TruncatedFile(format!(
            "header needs 16 bytes, file has {}",
            bytes.len()
        )));
    }
    if &bytes[0..4] != IMAGE_MAGIC {
        return Err(Error::Parse {
            row: 0,
            col: 0,
            msg: "bad magic, expected AIMG".into(),
        });
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes")) as usize;
    let (n, h, w) = (word(4), word(8), word(12));
    if n == 0 || h == 0 || w == 0 {
        return Err(Error::EmptyDataset);
    }
    let m = h
        .checked_mul(w)
        .ok_or_else(|| Error::invalid("image geometry overflows"))?;
    let pixel_bytes = n
        .checked_mul(m)
        .ok_or_else(|| Error::invalid("image count overflows"))?;
    let expected = 16 + pixel_bytes + 4 * n;
    if bytes.len() < expected {
        return Err(Error::TruncatedFile(format!(
            "expected {expected} bytes for {n} images of {h}x{w}, found {}",
            bytes.len()
        )));
    }
    let pixels = &bytes[16..16 + pixel_bytes];
    let features = DMatrix::from_iterator(m, n, pixels.iter().map(|&p| p as f64 / 255.0));
    let raw: Vec<u32> = bytes[16 + pixel_bytes..expected]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    let raw_text: Vec<String> = raw.iter().map(u32::to_string).collect();
    let (labels, class_names) = densify(&raw_text);
    LabeledDataset::new(name, features, labels, class_names, Some((h, w)))
}

/// Encodes `ds` in the packed image format. Values are clamped to `[0, 1]` and
/// rounded to the nearest of 256 levels; class names must parse as `u32`,
/// otherwise dense class ids are written.
pub fn encode_image_matrix(ds: &LabeledDataset) -> Result<Vec<u8>> {
    let (h, w) = ds
        .geometry
        .ok_or_else(|| Error::invalid("dataset has no image geometry"))?;
    let mut out = Vec::with_capacity(16 + ds.len() * (h * w + 4));
    out.extend_from_slice(IMAGE_MAGIC);
    for v in [ds.len(), h, w] {
        let v = u32::try_from(v).map_err(|_| Error::invalid("dimension exceeds u32"))?;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend(ds.features.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    let numeric: Option<Vec<u32>> = ds.class_names.iter().map(|s| s.parse().ok()).collect();
    for &k in &ds.labels {
        let id = numeric.as_ref().map_or(k as u32, |ids| ids[k]);
        out.extend_from_slice(&id.to_le_bytes());
    }
    Ok(out)
}

pub fn write_image_matrix(ds: &LabeledDataset, path: &Path) -> Result<()> {
    std::fs::write(path, encode_image_matrix(ds)?).map_err(|e| Error::io(path, e))
}

/// Loads by extension: `.csv` as CSV (label in `label_column`), anything else
/// as a packed image matrix.
pub fn load_dataset(path: &Path, label_column: &LabelColumn) -> Result<LabeledDataset> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => load_csv(path, label_column),
        _ => load_image_matrix(path),
    }
}

/// Per-feature scaling, fitted on training samples only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    None,
    /// Zero mean, unit sample standard deviation.
    Standardize,
    /// Training range mapped onto `[-1, 1]`.
    #[default]
    MinMax,
}

impl Scaling {
    pub fn name(self) -> &'static str {
        match self {
            Scaling::None => "none",
            Scaling::Standardize => "standardize",
            Scaling::MinMax => "min-max to [-1, 1]",
        }
    }
}

/// Affine map `(x - offset) / scale` per feature. Features that are constant
/// on the training samples map to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScaler {
    pub offset: DVector<f64>,
    pub scale: DVector<f64>,
}

impl FeatureScaler {
    pub fn fit(kind: Scaling, train: &DMatrix<f64>) -> Self {
        let m = train.nrows();
        match kind {
            Scaling::None => Self {
                offset: DVector::zeros(m),
                scale: DVector::from_element(m, 1.0),
            },
            Scaling::Standardize => {
                let n = train.ncols() as f64;
                let offset = train.column_mean();
                let scale = DVector::from_iterator(
                    m,
                    train.row_iter().enumerate().map(|(i, row)| {
                        let var = row.iter().map(|v| (v - offset[i]).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
                        var.sqrt()
                    }),
                );
                Self { offset, scale }
            }
            Scaling::MinMax => {
                let lo = DVector::from_iterator(m, train.row_iter().map(|r| r.min()));
                let hi = DVector::from_iterator(m, train.row_iter().map(|r| r.max()));
                Self {
                    offset: (&lo + &hi) / 2.0,
                    scale: (hi - lo) / 2.0,
                }
            }
        }
    }

    pub fn apply(&self, samples: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = samples.clone();
        for mut col in out.column_iter_mut() {
            for i in 0..col.len() {
                let s = self.scale[i];
                col[i] = if s > 1e-12 { (col[i] - self.offset[i]) / s } else { 0.0 };
            }
        }
        out
    }
}
