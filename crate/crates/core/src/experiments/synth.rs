//! Synthetic face-like data with controllable inter-class correlation.
//!
//! Class `k` has a unit "identity" direction `u_k`; all classes share a unit
//! direction `s`. A sample of class `k` is
//!
//! ```text
//! x = (1 - rho) u_k + rho s + noise * g / sqrt(m),   g ~ N(0, I_m)
//! ```
//!
//! `rho = 0` gives nearly orthogonal classes, `rho = 1` collapses every class
//! onto `s`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::dataset::LabeledDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    /// Inter-class correlation in `[0, 1]`.
    pub rho: f64,
    #[serde(default = "default_noise")]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

pub const DEFAULT_NOISE: f64 = 0.3;

fn default_noise() -> f64 {
    DEFAULT_NOISE
}

impl SynthSpec {
    pub fn new(classes: usize, per_class: usize, dim: usize, rho: f64) -> Self {
        Self {
            classes,
            per_class,
            dim,
            rho,
            noise: DEFAULT_NOISE,
            seed: 0,
        }
    }

    pub fn with_noise(self, noise: f64) -> Self {
        Self { noise, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn generate(&self) -> Result<LabeledDataset> {
        synth_face_like(self)
    }
}

fn unit_gaussian(m: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v = DVector::<f64>::from_fn(m, |_, _| StandardNormal.sample(rng));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Samples are ordered class by class. Geometry is set to `(r, r)` when `dim`
/// is a perfect square `r * r`.
pub fn synth_face_like(spec: &SynthSpec) -> Result<LabeledDataset> {
    let SynthSpec {
        classes,
        per_class,
        dim,
        rho,
        noise,
        seed,
    } = *spec;
    if classes == 0 || per_class == 0 || dim == 0 {
        return Err(Error::Config("classes, per_class and dim must be positive".into()));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Config(format!("rho must lie in [0, 1], got {rho}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::Config(format!("noise must be >= 0, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shared = unit_gaussian(dim, &mut rng);
    let identities: Vec<DVector<f64>> = (0..classes).map(|_| unit_gaussian(dim, &mut rng)).collect();
    let scale = noise / (dim as f64).sqrt();
    let n = classes * per_class;
    let mut features = DMatrix::zeros(dim, n);
    let mut labels = Vec::with_capacity(n);
    for (k, u) in identities.iter().enumerate() {
        let center = u * (1.0 - rho) + &shared * rho;
        for j in 0..per_class {
            let mut col = features.column_mut(k * per_class + j);
            for i in 0..dim {
                let g: f64 = StandardNormal.sample(&mut rng);
                col[i] = center[i] + scale * g;
            }
            labels.push(k);
        }
    }
    let side = (dim as f64).sqrt().round() as usize;
    let geometry = (side * side == dim).then_some((side, side));
    LabeledDataset::new(
        format!("synth-K{classes}-n{per_class}-m{dim}-rho{rho}"),
        features,
        labels,
        (0..classes).map(|k| format!("class{k}")).collect(),
        geometry,
    )
}
