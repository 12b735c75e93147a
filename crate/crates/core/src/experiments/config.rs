//! Benchmark configuration, read from TOML or JSON.
//!
//! ```toml
//! methods = ["asrc", "src", "crc"]
//! dims = []                      # PCA output dims; empty keeps raw features
//! corruption = [0.0]             # fractions of test pixels to corrupt
//!
//! [split]
//! kind = "k_fold"                # or "per_class" with `t = ...`
//! k = 10
//! seed = 1
//! repeats = 1
//!
//! [[datasets]]
//! path = "data/uci/heart.csv"    # relative to the config file
//! label = "class"
//!
//! [grids]
//! lambda = [1e-4, 1e-3, 1e-2, 1e-1]
//! sigma = [1e-3, 1e-2, 1e-1]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::corrupt::observed_range;
use super::dataset::{load_dataset, LabelColumn, LabeledDataset, Scaling};
use super::split::SplitSpec;
use super::synth::SynthSpec;
use crate::classify::{Method, MethodKind};
use crate::error::{Error, Result};
use crate::types::SolverOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    /// Defaults to the file stem, or the generated name for synthetic data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// CSV or packed image matrix. Exactly one of `path` and `synth` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub label: LabelColumn,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
    /// Per-feature scaling fitted on each training set. Defaults to min-max
    /// for CSV files and none for image and synthetic data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<Scaling>,
}

impl DatasetSpec {
    pub fn file(path: impl Into<PathBuf>, label: LabelColumn) -> Self {
        Self {
            name: None,
            path: Some(path.into()),
            label,
            synth: None,
            scaling: None,
        }
    }

    pub fn synthetic(spec: SynthSpec) -> Self {
        Self {
            name: None,
            path: None,
            label: LabelColumn::default(),
            synth: Some(spec),
            scaling: None,
        }
    }

    fn is_csv(&self) -> bool {
        self.path
            .as_ref()
            .and_then(|p| p.extension())
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    }

    pub fn scaling(&self) -> Scaling {
        self.scaling
            .unwrap_or(if self.is_csv() { Scaling::MinMax } else { Scaling::None })
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.path, &self.synth) {
            (Some(_), None) | (None, Some(_)) => Ok(()),
            _ => Err(Error::Config("dataset needs exactly one of `path` and `synth`".into())),
        }
    }

    /// Loads or generates the data; relative paths resolve against `base`.
    pub fn load(&self, base: Option<&Path>) -> Result<LabeledDataset> {
        self.validate()?;
        let mut ds = match (&self.path, &self.synth) {
            (Some(p), _) => {
                let full = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                load_dataset(&full, &self.label)?
            }
            (None, Some(s)) => s.generate()?,
            (None, None) => unreachable!("validated"),
        };
        if let Some(name) = &self.name {
            ds.name = name.clone();
        }
        Ok(ds)
    }

    /// Value range for corruption noise: `[0, 1]` for packed image files,
    /// the observed data range otherwise.
    pub fn corruption_range(&self, ds: &LabeledDataset) -> (f64, f64) {
        if self.path.is_some() && !self.is_csv() {
            (0.0, 1.0)
        } else {
            observed_range(ds.features.as_slice())
        }
    }
}

/// Candidate regularization weights. A single value disables selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    /// ASRC and SRC.
    pub lambda: Vec<f64>,
    /// CRC.
    pub sigma: Vec<f64>,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            lambda: vec![1e-4, 1e-3, 1e-2, 1e-1],
            sigma: vec![1e-3, 1e-2, 1e-1],
        }
    }
}

impl Grids {
    pub fn for_method(&self, kind: MethodKind) -> &[f64] {
        match kind {
            MethodKind::Asrc | MethodKind::Src => &self.lambda,
            MethodKind::Crc => &self.sigma,
            MethodKind::Nn | MethodKind::Nfs => &[],
        }
    }
}

fn default_methods() -> Vec<MethodKind> {
    MethodKind::ALL.to_vec()
}

fn default_corruption() -> Vec<f64> {
    vec![0.0]
}

fn default_validation_folds() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub datasets: Vec<DatasetSpec>,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodKind>,
    /// PCA output dimensions; empty means raw features.
    #[serde(default)]
    pub dims: Vec<usize>,
    pub split: SplitSpec,
    #[serde(default)]
    pub grids: Grids,
    /// ADM settings for ASRC; `lambda` is overridden by the grid.
    #[serde(default)]
    pub solver: SolverOptions,
    /// Score ASRC classes on the query with its estimated gross errors removed.
    #[serde(default)]
    pub denoise_residual: bool,
    /// Fractions of test pixels replaced by noise. Training data is never corrupted.
    #[serde(default = "default_corruption")]
    pub corruption: Vec<f64>,
    /// Folds of the training set used to carve out the validation fold for
    /// hyperparameter selection.
    #[serde(default = "default_validation_folds")]
    pub validation_folds: usize,
    /// Store wall-clock times in the report (makes reports non-reproducible).
    #[serde(default)]
    pub timing: bool,
    /// Store per-query predictions and class residuals.
    #[serde(default)]
    pub record_queries: bool,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl BenchmarkConfig {
    pub fn new(datasets: Vec<DatasetSpec>, methods: Vec<MethodKind>, split: SplitSpec) -> Self {
        Self {
            datasets,
            methods,
            dims: Vec::new(),
            split,
            grids: Grids::default(),
            solver: SolverOptions::default(),
            denoise_residual: false,
            corruption: default_corruption(),
            validation_folds: default_validation_folds(),
            timing: false,
            record_queries: false,
            base_dir: None,
        }
    }

    /// Parses TOML unless the text looks like a JSON object.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Config("no datasets".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods".into()));
        }
        for ds in &self.datasets {
            ds.validate()?;
        }
        self.split.validate()?;
        if self.dims.contains(&0) {
            return Err(Error::Config("feature dims must be >= 1".into()));
        }
        if self.corruption.is_empty() || self.corruption.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("corruption fractions must lie in [0, 1]".into()));
        }
        for kind in &self.methods {
            let grid = self.grids.for_method(*kind);
            if grid.is_empty() && kind.default_method().weight().is_some() {
                return Err(Error::Config(format!("empty hyperparameter grid for {kind}")));
            }
            if grid.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                return Err(Error::Config(format!("grid values for {kind} must be positive")));
            }
        }
        if self.validation_folds < 2 {
            return Err(Error::Config("validation_folds must be >= 2".into()));
        }
        self.solver.validate()
    }

    /// The method with ASRC solver settings applied and weight `w` (if any).
    pub fn method(&self, kind: MethodKind, w: Option<f64>) -> Method {
        let base = match kind {
            MethodKind::Asrc => Method::Asrc {
                opts: self.solver,
                denoise: self.denoise_residual,
            },
            other => other.default_method(),
        };
        match w {
            Some(w) => base.with_weight(w),
            None => base,
        }
    }
}
