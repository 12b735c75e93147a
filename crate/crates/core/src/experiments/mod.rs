//! Benchmark harness: datasets, split protocols, corruption, the runner and
//! report emission.

pub mod config;
pub mod corrupt;
pub mod dataset;
pub mod report;
pub mod runner;
pub mod split;
pub mod synth;

pub use config::{BenchmarkConfig, DatasetSpec};
pub use corrupt::{corrupt_dataset, corrupt_pixels};
pub use dataset::{load_csv, load_dataset, load_image_matrix, FeatureScaler, LabelColumn, LabeledDataset, Scaling};
pub use report::{emit_report, BenchmarkReport, ReportFormat};
pub use runner::run_benchmark;
pub use split::{kfold, split_per_class, Split, SplitKind, SplitSpec};
pub use synth::{synth_face_like, SynthSpec};

/// Mixes `parts` into `base` (splitmix64 finalizer per step), giving an
/// independent RNG seed for each unit of work.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut h = mix(base ^ 0x243f_6a88_85a3_08d3);
    for &p in parts {
        h = mix(h ^ mix(p.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    h
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
