use rayon::prelude::*;
use serde::Serialize;

use super::Classifier;
use crate::evaluate::stratified_fold_indices;
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridEntry<P> {
    pub params: P,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult<P> {
    pub best: P,
    pub best_mean_accuracy: f64,
    /// One entry per grid point, in grid order.
    pub table: Vec<GridEntry<P>>,
}

/// Stratified `k`-fold search over `grid`, keeping the best mean accuracy.
///
/// Equal means are resolved with [`Classifier::prefer`], so the winner does
/// not depend on the order of `grid`. Folds without test rows are skipped.
pub fn grid_search<C: Classifier>(
    clf: &C,
    x: &Matrix,
    y: &[usize],
    grid: &[C::Params],
    k: usize,
    seed: u64,
) -> Result<GridResult<C::Params>> {
    if grid.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    if x.rows() != y.len() {
        return Err(Error::Dimension {
            expected: x.rows(),
            got: y.len(),
        });
    }
    let folds = stratified_fold_indices(y, k, seed)?;
    let per_fold: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .filter_map(|f| {
            let (train, test): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| folds[i] != f);
            if test.is_empty() {
                return None;
            }
            let pick = |idx: &[usize]| idx.iter().map(|&i| y[i]).collect::<Vec<_>>();
            let scored = clf.score_grid(
                &x.select_rows(&train),
                &pick(&train),
                &x.select_rows(&test),
                &pick(&test),
                grid,
            );
            Some(scored.map(|c| c.iter().map(|&c| c as f64 / test.len() as f64).collect()))
        })
        .collect::<Result<_>>()?;
    if per_fold.is_empty() {
        return Err(Error::Fold("no fold has test rows".into()));
    }

    let table: Vec<GridEntry<C::Params>> = grid
        .iter()
        .enumerate()
        .map(|(g, p)| {
            let fold_accuracies: Vec<f64> = per_fold.iter().map(|f| f[g]).collect();
            let mean_accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
            GridEntry {
                params: p.clone(),
                fold_accuracies,
                mean_accuracy,
            }
        })
        .collect();

    let mut best = &table[0];
    for e in &table[1..] {
        if e.mean_accuracy > best.mean_accuracy
            || (e.mean_accuracy == best.mean_accuracy && clf.prefer(&e.params, &best.params).is_lt())
        {
            best = e;
        }
    }
    Ok(GridResult {
        best: best.params.clone(),
        best_mean_accuracy: best.mean_accuracy,
        table,
    })
}
