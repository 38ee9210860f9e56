use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, PhonationMode, Result};

/// Fold index of every item.
///
/// Classes are visited in ascending label order. Within a class, members
/// (in index order) are shuffled by a single seeded stream and dealt
/// round-robin; the dealing cursor carries over from one class to the next
/// so that total fold sizes also stay within one of each other.
pub fn stratified_fold_indices(labels: &[usize], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Fold(format!("k must be >= 2, got {k}")));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in labels.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; labels.len()];
    let mut cursor = 0;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            folds[i] = cursor;
            cursor = (cursor + 1) % k;
        }
    }
    Ok(folds)
}

/// Clip-to-fold assignment shared by every feature, layer and classifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub k: usize,
    pub seed: u64,
    pub assignments: BTreeMap<String, usize>,
}

/// Builds folds from a clip-id → label table. Members of each class are
/// ordered by clip id before shuffling, so the split depends only on the
/// table contents and the seed.
pub fn stratified_folds(labels: &BTreeMap<String, PhonationMode>, k: usize, seed: u64) -> Result<FoldSplit> {
    let idx: Vec<usize> = labels.values().map(|m| m.index()).collect();
    let folds = stratified_fold_indices(&idx, k, seed)?;
    Ok(FoldSplit {
        k,
        seed,
        assignments: labels.keys().cloned().zip(folds).collect(),
    })
}

impl FoldSplit {
    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn fold_of(&self, clip_id: &str) -> Option<usize> {
        self.assignments.get(clip_id).copied()
    }

    /// Clip ids of fold `f`, sorted.
    pub fn test_ids(&self, f: usize) -> Vec<&str> {
        self.assignments
            .iter()
            .filter(|(_, &g)| g == f)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    /// Clip ids outside fold `f`, sorted.
    pub fn train_ids(&self, f: usize) -> Vec<&str> {
        self.assignments
            .iter()
            .filter(|(_, &g)| g != f)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        self.assignments.values().for_each(|&f| sizes[f] += 1);
        sizes
    }
}
