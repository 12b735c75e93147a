//! Random pixel corruption: a fixed fraction of pixels, chosen without
//! replacement, replaced by uniform noise.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::LabeledDataset;
use super::derive_seed;

/// Number of pixels replaced at fraction `p` of `m` pixels.
pub fn corrupted_count(m: usize, p: f64) -> usize {
    let p = p.clamp(0.0, 1.0);
    ((p * m as f64 + 1e-9).floor() as usize).min(m)
}

/// Replaces `floor(p * len)` distinct, uniformly chosen entries of `pixels`
/// with independent `Uniform(lo, hi)` samples. `p` is clamped to `[0, 1]`.
/// Returns the sorted replaced indices.
pub fn corrupt_pixels<R: Rng + ?Sized>(pixels: &mut [f64], p: f64, rng: &mut R, range: (f64, f64)) -> Vec<usize> {
    let count = corrupted_count(pixels.len(), p);
    let (lo, hi) = range;
    let mut picked = index::sample(rng, pixels.len(), count).into_vec();
    picked.sort_unstable();
    for &i in &picked {
        pixels[i] = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    }
    picked
}

/// Corrupts every sample of `ds`. Sample `i` draws from its own stream derived
/// from `(seed, i)`, so the result does not depend on evaluation order.
pub fn corrupt_dataset(ds: &LabeledDataset, p: f64, seed: u64, range: (f64, f64)) -> LabeledDataset {
    let mut out = ds.clone();
    for (i, mut col) in out.features.column_iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[i as u64]));
        corrupt_pixels(col.as_mut_slice(), p, &mut rng, range);
    }
    out
}

/// Smallest and largest entry of the data; `(0, 1)` for empty input.
pub fn observed_range(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 1.0);
    }
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}
