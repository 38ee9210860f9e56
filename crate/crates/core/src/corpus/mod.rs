//! Recording manifest, WAV ingestion, resampling and normalization.

mod manifest;
mod resample;
mod wav;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use manifest::{load_manifest, read_manifest, write_manifest};
pub use resample::SincResampler;
pub use wav::{read_wav, write_wav_f32, WavData};

use crate::{Error, Result};

/// Sung phonation mode, ordered from least to most glottal adduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhonationMode {
    Breathy,
    Neutral,
    Flow,
    Pressed,
}

impl PhonationMode {
    pub const ALL: [PhonationMode; 4] = [
        PhonationMode::Breathy,
        PhonationMode::Neutral,
        PhonationMode::Flow,
        PhonationMode::Pressed,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PhonationMode::Breathy => "breathy",
            PhonationMode::Neutral => "neutral",
            PhonationMode::Flow => "flow",
            PhonationMode::Pressed => "pressed",
        }
    }
}

impl fmt::Display for PhonationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PhonationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "breathy" => Ok(PhonationMode::Breathy),
            "neutral" | "modal" => Ok(PhonationMode::Neutral),
            "flow" => Ok(PhonationMode::Flow),
            "pressed" => Ok(PhonationMode::Pressed),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

/// One manifest row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipMeta {
    pub id: String,
    pub path: PathBuf,
    pub label: PhonationMode,
    pub vowel: String,
    pub pitch: String,
}

/// A normalized mono clip at [`crate::TARGET_SAMPLE_RATE`].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    meta: ClipMeta,
    sample_rate: u32,
    samples: Vec<f64>,
}

impl AudioClip {
    /// Resamples `samples` from `source_rate` to `target_rate` and peak-normalizes.
    pub fn from_samples(
        meta: ClipMeta,
        source_rate: u32,
        samples: &[f64],
        target_rate: u32,
    ) -> Result<Self> {
        let resampled = if source_rate == target_rate {
            samples.to_vec()
        } else {
            SincResampler::new(source_rate, target_rate)?.process(samples)
        };
        let samples = peak_normalize(&resampled).ok_or_else(|| Error::SilentClip(meta.id.clone()))?;
        Ok(AudioClip {
            meta,
            sample_rate: target_rate,
            samples,
        })
    }

    /// Wraps samples that are already at the target rate without touching them.
    ///
    /// Intended for synthetic signals in tests and benchmarks; no normalization
    /// is applied.
    pub fn from_raw(meta: ClipMeta, sample_rate: u32, samples: Vec<f64>) -> Self {
        AudioClip {
            meta,
            sample_rate,
            samples,
        }
    }

    pub fn meta(&self) -> &ClipMeta {
        &self.meta
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Divides by the peak absolute value. Returns `None` for an all-zero signal.
pub fn peak_normalize(samples: &[f64]) -> Option<Vec<f64>> {
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 || !peak.is_finite() {
        return None;
    }
    Some(samples.iter().map(|v| v / peak).collect())
}

/// Reads the clip's WAV, mixes to mono, resamples and normalizes.
pub fn ingest_clip(meta: &ClipMeta, target_rate: u32) -> Result<AudioClip> {
    let wav = read_wav(&meta.path)?;
    if wav.sample_rate < target_rate {
        return Err(Error::UnsupportedRate {
            from: wav.sample_rate,
            to: target_rate,
        });
    }
    AudioClip::from_samples(meta.clone(), wav.sample_rate, &wav.mono(), target_rate)
}

#[cfg(test)]
pub(crate) fn test_meta(id: &str) -> ClipMeta {
    ClipMeta {
        id: id.to_string(),
        path: PathBuf::from(format!("{id}.wav")),
        label: PhonationMode::Neutral,
        vowel: "A".into(),
        pitch: "C4".into(),
    }
}
