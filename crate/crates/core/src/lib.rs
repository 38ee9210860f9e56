//! Phonation-mode classification toolkit.
//!
//! The crate covers the whole analysis pipeline for sustained sung vowels:
//!
//! * [`corpus`]: manifest parsing, WAV ingestion, windowed-sinc resampling
//!   and peak normalization to 16 kHz clips.
//! * [`dsp`]: log-magnitude spectrogram, log-mel and MFCC (+Δ, +ΔΔ) feature
//!   vectors, each averaged over time.
//! * [`embed`]: the `V2ME` layer-embedding store and global mean pooling.
//! * [`learn`]: z-score standardization, a one-vs-one SMO support vector
//!   machine, softmax gradient-boosted trees and grid search.
//! * [`evaluate`]: stratified folds, nested cross-validation, confusion
//!   matrices and layer sweeps.

pub mod corpus;
pub mod dsp;
pub mod embed;
mod error;
pub mod evaluate;
pub mod features;
pub mod learn;
pub mod matrix;

pub use corpus::{AudioClip, ClipMeta, PhonationMode};
pub use error::{Error, Result};
pub use features::{FeatureKind, FeatureVector};
pub use matrix::Matrix;

/// Sample rate every clip is converted to on ingestion.
pub const TARGET_SAMPLE_RATE: u32 = 16_000;
