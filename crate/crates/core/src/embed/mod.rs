//! Layer-wise embeddings: model geometry, per-clip layer matrices, global
//! mean pooling and the `V2ME` interchange store.

mod store;

use serde::{Deserialize, Serialize};

pub use store::{write_store, FeatureStore, StoreIndexEntry, MAGIC, VERSION};

use crate::{Error, FeatureKind, FeatureVector, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model_id: String,
    /// Transformer layers; the store holds `n_layers + 1` vectors including layer 0.
    pub n_layers: usize,
    pub hidden_dim: usize,
}

/// `(model_id, n_layers, hidden_dim)` for the supported checkpoints.
pub const KNOWN_MODELS: [(&str, usize, usize); 3] = [
    ("wav2vec2-base", 12, 768),
    ("wav2vec2-large", 24, 1024),
    ("hubert-large", 24, 1024),
];

/// Convolutional feature encoder shared by wav2vec2 and HuBERT: (kernel, stride).
const CONV_STACK: [(usize, usize); 7] = [(10, 5), (3, 2), (3, 2), (3, 2), (3, 2), (2, 2), (2, 2)];

impl ModelSpec {
    pub fn known(model_id: &str) -> Option<Self> {
        KNOWN_MODELS
            .iter()
            .find(|(id, ..)| *id == model_id)
            .map(|&(id, n_layers, hidden_dim)| ModelSpec {
                model_id: id.to_string(),
                n_layers,
                hidden_dim,
            })
    }

    pub fn custom(model_id: impl Into<String>, n_layers: usize, hidden_dim: usize) -> Self {
        ModelSpec {
            model_id: model_id.into(),
            n_layers,
            hidden_dim,
        }
    }

    /// Number of pooled vectors per clip (layer 0 plus every transformer layer).
    pub fn vector_count(&self) -> usize {
        self.n_layers + 1
    }

    /// Known ids must carry their canonical geometry.
    pub fn validate(&self) -> Result<()> {
        if let Some(k) = ModelSpec::known(&self.model_id) {
            if k != *self {
                return Err(Error::Store(format!(
                    "model {} must have {} layers of dim {}, header says {} of dim {}",
                    k.model_id, k.n_layers, k.hidden_dim, self.n_layers, self.hidden_dim
                )));
            }
        }
        if self.hidden_dim == 0 {
            return Err(Error::Store("hidden_dim must be positive".into()));
        }
        Ok(())
    }

    /// Frames the convolutional encoder emits for `samples` 16 kHz input samples
    /// (about one frame per 20 ms).
    pub fn expected_frames(samples: usize) -> usize {
        CONV_STACK.iter().fold(samples, |len, &(k, s)| {
            if len < k {
                0
            } else {
                (len - k) / s + 1
            }
        })
    }
}

/// Hidden states of every layer for one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerEmbeddingSet {
    clip_id: String,
    model: ModelSpec,
    frames: usize,
    pooled: bool,
    /// `n_layers + 1` row-major `frames × hidden_dim` blocks.
    layers: Vec<Vec<f32>>,
}

impl LayerEmbeddingSet {
    pub fn new(
        clip_id: impl Into<String>,
        model: ModelSpec,
        frames: usize,
        pooled: bool,
        layers: Vec<Vec<f32>>,
    ) -> Result<Self> {
        let clip_id = clip_id.into();
        if layers.len() != model.vector_count() {
            return Err(Error::Store(format!(
                "clip {clip_id}: expected {} layers, got {}",
                model.vector_count(),
                layers.len()
            )));
        }
        if pooled && frames != 1 {
            return Err(Error::Store(format!("clip {clip_id}: pooled sets hold exactly one frame")));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.len() != frames * model.hidden_dim {
                return Err(Error::Store(format!(
                    "clip {clip_id}: layer {i} has {} values, expected {frames}×{}",
                    l.len(),
                    model.hidden_dim
                )));
            }
            if !l.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite(format!("clip {clip_id} layer {i}")));
            }
        }
        Ok(LayerEmbeddingSet {
            clip_id,
            model,
            frames,
            pooled,
            layers,
        })
    }

    /// One pre-pooled row per layer.
    pub fn from_pooled(clip_id: impl Into<String>, model: ModelSpec, rows: Vec<Vec<f32>>) -> Result<Self> {
        Self::new(clip_id, model, 1, true, rows)
    }

    pub fn clip_id(&self) -> &str {
        &self.clip_id
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn is_pooled(&self) -> bool {
        self.pooled
    }

    pub fn layer(&self, index: usize) -> Option<&[f32]> {
        self.layers.get(index).map(Vec::as_slice)
    }

    pub fn layers(&self) -> &[Vec<f32>] {
        &self.layers
    }
}

/// Per-dimension arithmetic mean over frames, accumulated in `f64`.
pub fn mean_pool(set: &LayerEmbeddingSet, layer: usize) -> Result<FeatureVector> {
    let block = set.layer(layer).ok_or(Error::MissingLayer {
        layer,
        max: set.model.n_layers,
    })?;
    let dim = set.model.hidden_dim;
    let values = if set.pooled {
        block.iter().map(|&v| f64::from(v)).collect()
    } else {
        pool_block(block, set.frames, dim)?
    };
    FeatureVector::new(
        FeatureKind::Embedding,
        Some(set.model.model_id.clone()),
        Some(layer),
        values,
    )
}

pub(crate) fn pool_block(block: &[f32], frames: usize, dim: usize) -> Result<Vec<f64>> {
    if frames == 0 {
        return Err(Error::TooShort {
            needed: 1,
            got: 0,
            unit: "frames",
        });
    }
    let mut acc = vec![0.0f64; dim];
    for row in block.chunks_exact(dim) {
        for (a, &v) in acc.iter_mut().zip(row) {
            *a += f64::from(v);
        }
    }
    let n = frames as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}
