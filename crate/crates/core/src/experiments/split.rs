//! Train/test split protocols: `t` samples per class, and stratified k-fold.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    /// Sorted sample indices.
    pub train: Vec<usize>,
    /// Sorted sample indices.
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitKind {
    /// `t` random training samples from every class, the rest for test.
    PerClass { t: usize },
    /// Stratified k-fold cross validation; one split per fold.
    KFold { k: usize },
}

impl SplitKind {
    pub fn label(&self) -> String {
        match self {
            SplitKind::PerClass { t } => format!("t={t}"),
            SplitKind::KFold { k } => format!("{k}-fold"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    #[serde(flatten)]
    pub kind: SplitKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub repeats: usize,
}

fn one() -> usize {
    1
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            SplitKind::PerClass { t } if t == 0 => return Err(Error::Config("t must be >= 1".into())),
            SplitKind::KFold { k } if k < 2 => return Err(Error::Config("k must be >= 2".into())),
            _ => {}
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be >= 1".into()));
        }
        Ok(())
    }

    /// All splits of one repeat, drawn with `seed`.
    pub fn splits(&self, labels: &[usize], num_classes: usize, seed: u64) -> Result<Vec<Split>> {
        match self.kind {
            SplitKind::PerClass { t } => Ok(vec![split_per_class(labels, num_classes, t, seed)?]),
            SplitKind::KFold { k } => kfold(labels, num_classes, k, seed),
        }
    }
}

fn by_class(labels: &[usize], num_classes: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); num_classes];
    for (i, &k) in labels.iter().enumerate() {
        groups[k].push(i);
    }
    groups
}

/// Exactly `t` training samples per class, chosen uniformly at random.
///
/// Every class needs more than `t` samples so that it also appears in the test set.
pub fn split_per_class(labels: &[usize], num_classes: usize, t: usize, seed: u64) -> Result<Split> {
    if t == 0 {
        return Err(Error::Config("t must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, mut members) in by_class(labels, num_classes).into_iter().enumerate() {
        if members.len() <= t {
            return Err(Error::InsufficientSamples {
                class,
                available: members.len(),
                requested: t,
            });
        }
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..t]);
        test.extend_from_slice(&members[t..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

/// Stratified k-fold: class members are shuffled, laid end to end class by
/// class, and dealt to folds round-robin. Fold sizes differ by at most one,
/// and so do the per-class counts of any two folds.
pub fn kfold(labels: &[usize], num_classes: usize, k: usize, seed: u64) -> Result<Vec<Split>> {
    let n = labels.len();
    if k < 2 || k > n {
        return Err(Error::InvalidFoldCount { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; n];
    let mut pos = 0;
    for mut members in by_class(labels, num_classes) {
        members.shuffle(&mut rng);
        for i in members {
            fold_of[i] = pos % k;
            pos += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| fold_of[i] == f);
            Split { train, test }
        })
        .collect())
}
