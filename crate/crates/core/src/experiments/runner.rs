//! Benchmark orchestration.
//!
//! For every dataset, repeat and split: corrupt the test samples, standardize
//! and project with statistics of the training samples, pick each method's
//! weight on a validation fold, then classify every test sample. Queries are
//! classified in parallel; all randomness comes from streams derived from the
//! split seed, so results do not depend on the thread count.

use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::config::BenchmarkConfig;
use super::corrupt::corrupt_dataset;
use super::dataset::{FeatureScaler, LabeledDataset, Scaling};
use super::derive_seed;
use super::report::{mean_std, BenchmarkReport, QueryRecord, ResultRow, REPORT_FORMAT};
use super::split::kfold;
use crate::classify::{FittedClassifier, Method, MethodKind};
use crate::error::Result;
use crate::pca::fit_pca;
use crate::types::{Dictionary, Query};

/// A classifier fitted on the classes present in its training samples.
struct Fitted {
    clf: FittedClassifier,
    /// Local class id -> dataset class id.
    classes: Vec<usize>,
}

impl Fitted {
    fn fit(features: &DMatrix<f64>, labels: &[usize], num_classes: usize, method: Method) -> Result<Self> {
        let mut local = vec![usize::MAX; num_classes];
        let mut classes = Vec::new();
        for k in 0..num_classes {
            if labels.contains(&k) {
                local[k] = classes.len();
                classes.push(k);
            }
        }
        let dict = Dictionary::new(features.clone(), labels.iter().map(|&k| local[k]).collect())?;
        Ok(Self {
            clf: FittedClassifier::fit(&dict, method)?,
            classes,
        })
    }

    /// Predicted dataset class and class residuals.
    fn predict(&self, y: &[f64]) -> Result<(usize, Vec<f64>)> {
        let p = self.clf.classify(&Query::from_slice(y)?)?;
        Ok((self.classes[p.class_id], p.residuals))
    }
}

type Outcome = Result<(usize, Vec<f64>)>;

fn classify_all(fitted: &Fitted, queries: &DMatrix<f64>) -> Vec<Outcome> {
    (0..queries.ncols())
        .into_par_iter()
        .map(|i| fitted.predict(queries.column(i).as_slice()))
        .collect()
}

fn count_correct(outcomes: &[Outcome], truth: &[usize]) -> usize {
    outcomes
        .iter()
        .zip(truth)
        .filter(|(o, &t)| matches!(o, Ok((p, _)) if *p == t))
        .count()
}

/// Best weight on one validation fold of the training samples; ties go to the
/// earliest grid entry.
fn select_weight(
    cfg: &BenchmarkConfig,
    kind: MethodKind,
    features: &DMatrix<f64>,
    labels: &[usize],
    num_classes: usize,
    seed: u64,
) -> Option<f64> {
    let grid = cfg.grids.for_method(kind);
    match grid.len() {
        0 => return None,
        1 => return Some(grid[0]),
        _ => {}
    }
    let folds = cfg.validation_folds.min(labels.len());
    let Ok(splits) = kfold(labels, num_classes, folds, seed) else {
        return Some(grid[0]);
    };
    let fold = &splits[0];
    let tr_x = features.select_columns(&fold.train);
    let tr_y: Vec<usize> = fold.train.iter().map(|&i| labels[i]).collect();
    let va_x = features.select_columns(&fold.test);
    let va_y: Vec<usize> = fold.test.iter().map(|&i| labels[i]).collect();
    let mut best = (grid[0], None::<usize>);
    for &w in grid {
        let score = match Fitted::fit(&tr_x, &tr_y, num_classes, cfg.method(kind, Some(w))) {
            Ok(f) => count_correct(&classify_all(&f, &va_x), &va_y),
            Err(e) => {
                log::warn!("validation fit failed for {kind} weight {w}: {e}");
                0
            }
        };
        if best.1.map_or(true, |b| score > b) {
            best = (w, Some(score));
        }
    }
    Some(best.0)
}

struct Cell {
    accuracies: Vec<f64>,
    hyper: Vec<Option<f64>>,
    dims: Vec<usize>,
    clamped: bool,
    failures: usize,
    seconds: f64,
}

impl Cell {
    fn new() -> Self {
        Self {
            accuracies: Vec::new(),
            hyper: Vec::new(),
            dims: Vec::new(),
            clamped: false,
            failures: 0,
            seconds: 0.0,
        }
    }
}

/// Train and test features after standardization and optional PCA.
fn transform(
    train: &DMatrix<f64>,
    tests: &[DMatrix<f64>],
    scaling: Scaling,
    dim: Option<usize>,
) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>, usize, bool)> {
    let (mut tr, mut te) = if scaling == Scaling::None {
        (train.clone(), tests.to_vec())
    } else {
        let s = FeatureScaler::fit(scaling, train);
        (s.apply(train), tests.iter().map(|t| s.apply(t)).collect())
    };
    let mut clamped = false;
    if let Some(d) = dim {
        let max = tr.nrows().min(tr.ncols().saturating_sub(1)).max(1);
        let used = d.min(max);
        clamped = used < d;
        let pca = fit_pca(&tr, used)?;
        te = te.iter().map(|t| pca.project(t)).collect::<Result<_>>()?;
        tr = pca.project(&tr)?;
    }
    let m = tr.nrows();
    Ok((tr, te, m, clamped))
}

pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let dims: Vec<Option<usize>> = if cfg.dims.is_empty() {
        vec![None]
    } else {
        cfg.dims.iter().map(|&d| Some(d)).collect()
    };
    let mut notes = vec![format!(
        "weights chosen by accuracy on the first fold of a stratified {}-fold split of each training set \
         (uncorrupted), ties to the earliest grid value",
        cfg.validation_folds
    )];
    if cfg.denoise_residual && cfg.methods.contains(&MethodKind::Asrc) {
        notes.push("asrc class residuals computed on y - e (estimated gross errors removed)".into());
    }
    let mut results = Vec::new();
    let mut queries = Vec::new();

    for (di, spec) in cfg.datasets.iter().enumerate() {
        let ds = spec.load(cfg.base_dir.as_deref())?;
        let scaling = spec.scaling();
        let range = spec.corruption_range(&ds);
        notes.push(format!(
            "{}: {} samples, {} features, {} classes; per-feature scaling fitted on each training set: {}; \
             asrc/src/crc dictionaries scaled to unit column norm; corruption noise Uniform[{}, {}] on test samples only",
            ds.name,
            ds.len(),
            ds.dim(),
            ds.num_classes(),
            scaling.name(),
            range.0,
            range.1
        ));
        let k = ds.num_classes();
        let mut cells: Vec<Cell> = (0..dims.len() * cfg.corruption.len() * cfg.methods.len())
            .map(|_| Cell::new())
            .collect();
        let cell_index = |d: usize, l: usize, m: usize| (d * cfg.corruption.len() + l) * cfg.methods.len() + m;
        let mut split_id = 0usize;

        for repeat in 0..cfg.split.repeats {
            let splits = cfg
                .split
                .splits(&ds.labels, k, derive_seed(cfg.split.seed, &[di as u64, repeat as u64]))?;
            for split in splits {
                let sid = split_id;
                split_id += 1;
                let train = ds.select(&split.train);
                let test = ds.select(&split.test);
                let corrupted: Vec<LabeledDataset> = cfg
                    .corruption
                    .iter()
                    .enumerate()
                    .map(|(li, &p)| {
                        if p == 0.0 {
                            test.clone()
                        } else {
                            corrupt_dataset(
                                &test,
                                p,
                                derive_seed(cfg.split.seed, &[di as u64, sid as u64, li as u64, 1]),
                                range,
                            )
                        }
                    })
                    .collect();
                let test_feats: Vec<DMatrix<f64>> = corrupted.into_iter().map(|c| c.features).collect();

                for (dix, &dim) in dims.iter().enumerate() {
                    let (tr, te, used, clamped) = transform(&train.features, &test_feats, scaling, dim)?;
                    for (mi, &kind) in cfg.methods.iter().enumerate() {
                        let start = Instant::now();
                        let vseed = derive_seed(cfg.split.seed, &[di as u64, sid as u64, 2]);
                        let weight = select_weight(cfg, kind, &tr, &train.labels, k, vseed);
                        let fitted = Fitted::fit(&tr, &train.labels, k, cfg.method(kind, weight));
                        if let Err(e) = &fitted {
                            log::warn!("{}: fitting {kind} on split {sid} failed: {e}", ds.name);
                        }
                        for (li, feats) in te.iter().enumerate() {
                            let outcomes: Vec<Outcome> = match &fitted {
                                Ok(f) => classify_all(f, feats),
                                Err(_) => Vec::new(),
                            };
                            let correct = count_correct(&outcomes, &test.labels);
                            let failed = if fitted.is_ok() {
                                outcomes.iter().filter(|o| o.is_err()).count()
                            } else {
                                test.len()
                            };
                            for (i, o) in outcomes.iter().enumerate() {
                                if let Err(e) = o {
                                    log::warn!("{}: {kind} failed on sample {}: {e}", ds.name, split.test[i]);
                                }
                            }
                            if cfg.record_queries {
                                for i in 0..test.len() {
                                    let (predicted, residuals) = match outcomes.get(i) {
                                        Some(Ok((p, r))) => (Some(*p), r.clone()),
                                        _ => (None, Vec::new()),
                                    };
                                    queries.push(QueryRecord {
                                        dataset: ds.name.clone(),
                                        method: kind.to_string(),
                                        requested_dim: dim,
                                        corruption: cfg.corruption[li],
                                        split_id: sid,
                                        sample: split.test[i],
                                        truth: test.labels[i],
                                        predicted,
                                        residuals,
                                    });
                                }
                            }
                            let cell = &mut cells[cell_index(dix, li, mi)];
                            cell.accuracies.push(correct as f64 / test.len() as f64);
                            cell.hyper.push(weight);
                            cell.dims.push(used);
                            cell.clamped |= clamped;
                            cell.failures += failed;
                        }
                        let secs = start.elapsed().as_secs_f64();
                        for li in 0..te.len() {
                            cells[cell_index(dix, li, mi)].seconds += secs / te.len() as f64;
                        }
                    }
                }
            }
        }

        for (dix, &dim) in dims.iter().enumerate() {
            for (li, &p) in cfg.corruption.iter().enumerate() {
                for (mi, kind) in cfg.methods.iter().enumerate() {
                    let cell = std::mem::replace(&mut cells[cell_index(dix, li, mi)], Cell::new());
                    let (mean, std) = mean_std(&cell.accuracies);
                    results.push(ResultRow {
                        dataset: ds.name.clone(),
                        method: kind.to_string(),
                        requested_dim: dim,
                        feature_dims: cell.dims,
                        dim_clamped: cell.clamped,
                        corruption: p,
                        split: cfg.split.kind.label(),
                        accuracy_mean: mean,
                        accuracy_std: std,
                        accuracies: cell.accuracies,
                        hyperparameters: cell.hyper,
                        failures: cell.failures,
                        wall_time_secs: cfg.timing.then_some(cell.seconds),
                    });
                }
            }
        }
    }

    Ok(BenchmarkReport {
        format: REPORT_FORMAT.into(),
        split: cfg.split.kind.label(),
        seed: cfg.split.seed,
        repeats: cfg.split.repeats,
        lambda_grid: cfg.grids.lambda.clone(),
        sigma_grid: cfg.grids.sigma.clone(),
        notes,
        results,
        queries,
    })
}
