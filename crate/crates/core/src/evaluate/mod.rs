//! Stratified cross-validation with nested grid search, confusion matrices
//! and per-layer sweeps over a [`FeatureStore`].

mod confusion;
mod folds;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use confusion::ConfusionMatrix;
pub use folds::{stratified_fold_indices, stratified_folds, FoldSplit};

use crate::embed::FeatureStore;
use crate::learn::{grid_search, Classifier};
use crate::{Error, FeatureKind, FeatureVector, Matrix, PhonationMode, Result};

/// Cross-validated result of one feature/classifier pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub feature: FeatureKind,
    pub model_id: Option<String>,
    pub layer: Option<usize>,
    pub classifier: String,
    pub k: usize,
    pub seed: u64,
    pub fold_sizes: Vec<usize>,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Population standard deviation of `fold_accuracies`.
    pub std_accuracy: f64,
    /// Hyperparameters picked by the inner search, per fold.
    pub fold_params: Vec<serde_json::Value>,
    pub confusion: ConfusionMatrix,
}

impl EvalReport {
    /// Model id for embeddings, otherwise the feature kind.
    pub fn feature_name(&self) -> String {
        self.model_id.clone().unwrap_or_else(|| self.feature.to_string())
    }

    pub fn descriptor(&self) -> String {
        match self.layer {
            Some(l) => format!("{}@L{l}", self.feature_name()),
            None => self.feature_name(),
        }
    }

    pub fn csv_header(k: usize) -> String {
        let mut s = String::from("feature,layer,classifier,mean,std");
        (1..=k).for_each(|f| {
            let _ = write!(s, ",fold_{f}");
        });
        s
    }

    pub fn csv_row(&self) -> String {
        let layer = self.layer.map(|l| l.to_string()).unwrap_or_default();
        let mut s = format!(
            "{},{},{},{},{}",
            self.feature_name(),
            layer,
            self.classifier,
            self.mean_accuracy,
            self.std_accuracy
        );
        for a in &self.fold_accuracies {
            let _ = write!(s, ",{a}");
        }
        s
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn inner_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct FoldOutcome {
    accuracy: f64,
    size: usize,
    params: serde_json::Value,
    confusion: ConfusionMatrix,
}

/// Outer k-fold evaluation of `clf` over `split`.
///
/// Each outer training partition runs its own stratified grid search (with
/// the same k) unless the grid has a single point, then the winner is refit
/// on the whole partition and scored on the held-out fold.
pub fn cross_validate<C: Classifier>(
    clf: &C,
    grid: &[C::Params],
    features: &HashMap<String, FeatureVector>,
    labels: &BTreeMap<String, PhonationMode>,
    split: &FoldSplit,
) -> Result<EvalReport> {
    if grid.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    let missing: Vec<String> = split
        .assignments
        .keys()
        .filter(|id| !features.contains_key(*id))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingFeatures(missing));
    }
    if let Some(id) = split.assignments.keys().find(|id| !labels.contains_key(*id)) {
        return Err(Error::Fold(format!("clip {id} has no label")));
    }
    let first = features[split.assignments.keys().next().ok_or_else(|| Error::Fold("empty split".into()))?]
        .clone();
    if let Some(v) = split.assignments.keys().map(|id| &features[id]).find(|v| v.dim() != first.dim()) {
        return Err(Error::Dimension {
            expected: first.dim(),
            got: v.dim(),
        });
    }

    let gather = |ids: &[&str]| -> Result<(Matrix, Vec<usize>)> {
        let rows: Vec<&[f64]> = ids.iter().map(|id| features[*id].values.as_slice()).collect();
        let y = ids.iter().map(|id| labels[*id].index()).collect();
        Ok((Matrix::from_rows(&rows)?, y))
    };

    let outcomes: Vec<FoldOutcome> = (0..split.k)
        .into_par_iter()
        .map(|f| {
            let test_ids = split.test_ids(f);
            if test_ids.is_empty() {
                return Err(Error::Fold(format!("fold {f} has no test clips")));
            }
            let (train_x, train_y) = gather(&split.train_ids(f))?;
            let (test_x, test_y) = gather(&test_ids)?;
            let params = if grid.len() == 1 {
                grid[0].clone()
            } else {
                grid_search(clf, &train_x, &train_y, grid, split.k, inner_seed(split.seed, f))?.best
            };
            let model = clf.fit(&train_x, &train_y, &params)?;
            let pred = clf.predict(&model, &test_x)?;
            let mut confusion = ConfusionMatrix::new();
            for (&t, &p) in test_y.iter().zip(&pred) {
                let p = PhonationMode::from_index(p)
                    .ok_or_else(|| Error::Config(format!("classifier predicted unknown class {p}")))?;
                confusion.record(PhonationMode::from_index(t).expect("label index"), p);
            }
            Ok(FoldOutcome {
                accuracy: confusion.accuracy(),
                size: test_ids.len(),
                params: serde_json::to_value(&params)?,
                confusion,
            })
        })
        .collect::<Result<_>>()?;

    let fold_accuracies: Vec<f64> = outcomes.iter().map(|o| o.accuracy).collect();
    let (mean_accuracy, std_accuracy) = mean_std(&fold_accuracies);
    let mut confusion = ConfusionMatrix::new();
    outcomes.iter().for_each(|o| confusion.merge(&o.confusion));
    Ok(EvalReport {
        feature: first.kind,
        model_id: first.model_id.clone(),
        layer: first.layer,
        classifier: clf.name().to_string(),
        k: split.k,
        seed: split.seed,
        fold_sizes: outcomes.iter().map(|o| o.size).collect(),
        fold_accuracies,
        mean_accuracy,
        std_accuracy,
        fold_params: outcomes.into_iter().map(|o| o.params).collect(),
        confusion,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSweepResult {
    pub model_id: String,
    pub classifier: String,
    /// One report per layer, layer 0 first.
    pub reports: Vec<EvalReport>,
}

impl LayerSweepResult {
    /// Layer with the highest mean accuracy; the earliest wins ties.
    pub fn best_layer(&self) -> usize {
        let mut best = 0;
        for (l, r) in self.reports.iter().enumerate() {
            if r.mean_accuracy > self.reports[best].mean_accuracy {
                best = l;
            }
        }
        best
    }

    /// `layer,mean,std` per layer.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("layer,mean,std\n");
        for (l, r) in self.reports.iter().enumerate() {
            let _ = writeln!(s, "{l},{},{}", r.mean_accuracy, r.std_accuracy);
        }
        s
    }
}

/// Cross-validates every layer of `store` on mean-pooled vectors with one shared split.
pub fn layer_sweep<C: Classifier>(
    clf: &C,
    grid: &[C::Params],
    store: &FeatureStore,
    labels: &BTreeMap<String, PhonationMode>,
    split: &FoldSplit,
) -> Result<LayerSweepResult> {
    let model = store.model();
    let reports = (0..=model.n_layers)
        .into_par_iter()
        .map(|layer| {
            let features: HashMap<String, FeatureVector> = store.pooled_layer(layer)?.into_iter().collect();
            log::debug!("{}: evaluating layer {layer}", model.model_id);
            cross_validate(clf, grid, &features, labels, split)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LayerSweepResult {
        model_id: model.model_id.clone(),
        classifier: clf.name().to_string(),
        reports,
    })
}

/// Classifier that answers from a fixed row → label table, ignoring training.
///
/// A test hook: seeded with the true labels it scores 100%.
#[derive(Debug, Clone, Default)]
pub struct LookupOracle {
    table: HashMap<Vec<u64>, usize>,
}

fn row_key(row: &[f64]) -> Vec<u64> {
    row.iter().map(|v| v.to_bits()).collect()
}

impl LookupOracle {
    /// Later duplicates of a row override earlier ones.
    pub fn new<'a>(rows: impl IntoIterator<Item = (&'a [f64], usize)>) -> Self {
        LookupOracle {
            table: rows.into_iter().map(|(r, c)| (row_key(r), c)).collect(),
        }
    }
}

impl Classifier for LookupOracle {
    type Params = ();
    type Model = ();

    fn name(&self) -> &str {
        "oracle"
    }

    fn fit(&self, _x: &Matrix, _y: &[usize], _params: &()) -> Result<()> {
        Ok(())
    }

    fn predict(&self, _model: &(), x: &Matrix) -> Result<Vec<usize>> {
        x.iter_rows()
            .map(|r| {
                self.table
                    .get(&row_key(r))
                    .copied()
                    .ok_or_else(|| Error::Config("row missing from oracle table".into()))
            })
            .collect()
    }

    fn prefer(&self, _a: &(), _b: &()) -> std::cmp::Ordering {
        std::cmp::Ordering::Equal
    }
}
