use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Corpus, EmotionLabel};
use crate::error::{Error, Result};
use crate::seed;

/// Assignment of every sample of a corpus to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub k: usize,
    pub sample_ids: Vec<String>,
    /// Fold index per sample, aligned with the corpus order.
    pub folds: Vec<usize>,
}

impl FoldSplit {
    pub fn fold_of(&self, sample_id: &str) -> Option<usize> {
        self.sample_ids
            .iter()
            .position(|id| id == sample_id)
            .map(|i| self.folds[i])
    }

    /// Corpus positions held out in `fold`.
    pub fn held_out(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len())
            .filter(|&i| self.folds[i] == fold)
            .collect()
    }

    /// Corpus positions used for fitting when `fold` is held out.
    pub fn training(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len())
            .filter(|&i| self.folds[i] != fold)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.folds {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded k-fold assignment with balanced fold sizes.
///
/// With `stratify`, samples are shuffled within each class and dealt
/// round-robin class by class, so every fold sees every class that has at
/// least `k` samples.
pub fn kfold_split(corpus: &Corpus, k: usize, seed: u64, stratify: bool) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "k must be at least 2, got {k}"
        )));
    }
    if corpus.len() < k {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds corpus size {}",
            corpus.len()
        )));
    }
    let mut rng = seed::rng(seed);
    let mut order: Vec<usize> = Vec::with_capacity(corpus.len());
    if stratify {
        for class in EmotionLabel::ALL {
            let mut members: Vec<usize> = corpus
                .samples()
                .iter()
                .enumerate()
                .filter_map(|(i, s)| (s.label == class).then_some(i))
                .collect();
            members.shuffle(&mut rng);
            order.extend(members);
        }
    } else {
        order.extend(0..corpus.len());
        order.shuffle(&mut rng);
    }
    let mut folds = vec![0; corpus.len()];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % k;
    }
    Ok(FoldSplit {
        k,
        sample_ids: corpus
            .samples()
            .iter()
            .map(|s| s.sample_id.clone())
            .collect(),
        folds,
    })
}
