//! Fixed-length feature vectors with provenance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Spectrogram,
    #[serde(rename = "mel")]
    MelSpectrogram,
    Mfcc,
    Embedding,
}

impl FeatureKind {
    /// Baseline kinds have a fixed dimension; embeddings depend on the model.
    pub fn baseline_dim(self) -> Option<usize> {
        match self {
            FeatureKind::Spectrogram => Some(513),
            FeatureKind::MelSpectrogram => Some(80),
            FeatureKind::Mfcc => Some(39),
            FeatureKind::Embedding => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Spectrogram => "spectrogram",
            FeatureKind::MelSpectrogram => "mel",
            FeatureKind::Mfcc => "mfcc",
            FeatureKind::Embedding => "embedding",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spectrogram" | "spec" => Ok(FeatureKind::Spectrogram),
            "mel" | "melspectrogram" | "mel-spectrogram" => Ok(FeatureKind::MelSpectrogram),
            "mfcc" => Ok(FeatureKind::Mfcc),
            "embedding" => Ok(FeatureKind::Embedding),
            other => Err(Error::Config(format!("unknown feature kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub kind: FeatureKind,
    pub model_id: Option<String>,
    pub layer: Option<usize>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    /// Builds a vector, rejecting non-finite values and wrong baseline dims.
    pub fn new(
        kind: FeatureKind,
        model_id: Option<String>,
        layer: Option<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if let Some(dim) = kind.baseline_dim() {
            if values.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: values.len(),
                });
            }
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("{kind} feature vector")));
        }
        Ok(FeatureVector {
            kind,
            model_id,
            layer,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Short human-readable descriptor, e.g. `mfcc` or `hubert-large@L5`.
    pub fn descriptor(&self) -> String {
        match (&self.model_id, self.layer) {
            (Some(m), Some(l)) => format!("{m}@L{l}"),
            (Some(m), None) => m.clone(),
            _ => self.kind.to_string(),
        }
    }
}
