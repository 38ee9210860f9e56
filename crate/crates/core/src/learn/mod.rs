//! Classifiers trained from scratch: a one-vs-one SVM solved with SMO and
//! softmax gradient-boosted regression trees, both behind a z-score
//! [`Standardizer`] fitted on the training rows only.
//!
//! Labels are dense class indices (`usize`). A model remembers the sorted set
//! of classes it saw during training.

mod gbdt;
mod grid;
mod standardize;
mod svm;

use std::cmp::Ordering;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

pub use gbdt::{
    softmax_loss, Gbdt, GbdtModel, GbdtParams, RegressionTree, SplitRule, TreeNode,
};
pub use grid::{grid_search, GridEntry, GridResult};
pub use standardize::Standardizer;
pub use svm::{
    solve_smo, BinaryMachine, KernelKind, SmoSolution, Svm, SvmModel, SvmParams,
};

use crate::{Error, Matrix, Result};

/// A trainable classifier family with a hyperparameter type.
pub trait Classifier: Sync {
    type Params: Clone + Debug + PartialEq + Serialize + Send + Sync;
    type Model: Send + Sync;

    fn name(&self) -> &str;

    fn fit(&self, x: &Matrix, y: &[usize], params: &Self::Params) -> Result<Self::Model>;

    fn predict(&self, model: &Self::Model, x: &Matrix) -> Result<Vec<usize>>;

    /// Preference between two grid points of equal accuracy; `Less` means `a` wins.
    ///
    /// Must be a total order on distinct parameter values so that grid search
    /// does not depend on grid ordering.
    fn prefer(&self, a: &Self::Params, b: &Self::Params) -> Ordering;

    /// Number of correct test predictions for every grid point on one split.
    fn score_grid(
        &self,
        train_x: &Matrix,
        train_y: &[usize],
        test_x: &Matrix,
        test_y: &[usize],
        grid: &[Self::Params],
    ) -> Result<Vec<usize>> {
        grid.iter()
            .map(|p| {
                let model = self.fit(train_x, train_y, p)?;
                let pred = self.predict(&model, test_x)?;
                Ok(count_correct(&pred, test_y))
            })
            .collect()
    }
}

pub fn count_correct(pred: &[usize], truth: &[usize]) -> usize {
    pred.iter().zip(truth).filter(|(p, t)| p == t).count()
}

/// Sorted distinct labels; errors unless at least two classes are present.
pub(crate) fn class_list(y: &[usize]) -> Result<Vec<usize>> {
    let mut classes = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    Ok(classes)
}

pub(crate) fn check_training_data(x: &Matrix, y: &[usize]) -> Result<Vec<usize>> {
    if x.rows() != y.len() {
        return Err(Error::Dimension {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("training features".into()));
    }
    class_list(y)
}

/// Serialized model, tagged with a format version.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument {
    pub version: u32,
    pub model: TrainedModel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TrainedModel {
    Svm(SvmModel),
    Gbdt(GbdtModel),
}

impl ModelDocument {
    pub const VERSION: u32 = 1;

    pub fn new(model: TrainedModel) -> Self {
        ModelDocument {
            version: Self::VERSION,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(s)?;
        if doc.version != Self::VERSION {
            return Err(Error::Config(format!("unsupported model document version {}", doc.version)));
        }
        Ok(doc)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        match &self.model {
            TrainedModel::Svm(m) => m.predict(x),
            TrainedModel::Gbdt(m) => m.predict(x),
        }
    }
}
