//! Baseline spectro-temporal features: time-averaged log-magnitude
//! spectrogram (513-D), log-mel spectrogram (80-D) and MFCC with deltas and
//! delta-deltas (39-D).
//!
//! All three share one framing: 400-sample (25 ms) symmetric Hamming frames,
//! 80-sample (5 ms) hop, zero-padded to a 1024-point FFT. Magnitudes and mel
//! energies are floored at [`LOG_FLOOR`] before `log10`.

mod mel;
mod mfcc;
mod stft;

use serde::{Deserialize, Serialize};

pub use mel::{hz_to_mel, mel_to_hz, MelFilterbank};
pub use mfcc::{deltas, dct_matrix};
pub use stft::{frame_count, hamming, Stft};

use crate::{AudioClip, Error, FeatureKind, FeatureVector, Matrix, Result};

pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Window {
    Hamming,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub fft_size: usize,
    pub window: Window,
}

impl Default for StftConfig {
    fn default() -> Self {
        StftConfig {
            frame_len: 400,
            hop: 80,
            fft_size: 1024,
            window: Window::Hamming,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frame_len == 0 || self.frame_len > self.fft_size {
            return Err(Error::Config(format!(
                "frame_len {} must be in 1..={}",
                self.frame_len, self.fft_size
            )));
        }
        if self.hop == 0 {
            return Err(Error::Config("hop must be >= 1".into()));
        }
        if !self.fft_size.is_power_of_two() {
            return Err(Error::Config(format!("fft_size {} is not a power of two", self.fft_size)));
        }
        Ok(())
    }

    /// One-sided bin count, DC through Nyquist.
    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MelConfig {
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        MelConfig {
            n_mels: 80,
            fmin: 0.0,
            fmax: 8000.0,
        }
    }
}

impl MelConfig {
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        if self.n_mels == 0 {
            return Err(Error::Config("n_mels must be >= 1".into()));
        }
        if !(0.0 <= self.fmin && self.fmin < self.fmax && self.fmax <= sample_rate as f64 / 2.0) {
            return Err(Error::Config(format!(
                "mel range {}..{} Hz invalid for {} Hz audio",
                self.fmin, self.fmax, sample_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfccConfig {
    pub n_coeffs: usize,
    pub delta_window: usize,
    pub include_deltas: bool,
    pub include_delta_deltas: bool,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            n_coeffs: 13,
            delta_window: 2,
            include_deltas: true,
            include_delta_deltas: true,
        }
    }
}

impl MfccConfig {
    pub fn validate(&self, n_mels: usize) -> Result<()> {
        if self.n_coeffs == 0 || self.n_coeffs > n_mels {
            return Err(Error::Config(format!("n_coeffs must be in 1..={n_mels}")));
        }
        if self.delta_window == 0 {
            return Err(Error::Config("delta_window must be >= 1".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n_coeffs
            * (1 + usize::from(self.include_deltas) + usize::from(self.include_delta_deltas))
    }
}

/// Reusable extractor holding the FFT plan, window, filterbank and DCT.
pub struct BaselineExtractor {
    stft: Stft,
    filterbank: MelFilterbank,
    dct: Matrix,
    mfcc: MfccConfig,
}

impl BaselineExtractor {
    pub fn new(sample_rate: u32, stft: StftConfig, mel: MelConfig, mfcc: MfccConfig) -> Result<Self> {
        mel.validate(sample_rate)?;
        mfcc.validate(mel.n_mels)?;
        let stft = Stft::new(stft)?;
        let filterbank = MelFilterbank::new(&mel, sample_rate, stft.config().fft_size);
        Ok(BaselineExtractor {
            dct: dct_matrix(mel.n_mels),
            stft,
            filterbank,
            mfcc,
        })
    }

    /// The configuration used throughout: 16 kHz, 25 ms / 5 ms / 1024, 80 mels, 13 MFCCs.
    pub fn standard() -> Self {
        Self::new(
            crate::TARGET_SAMPLE_RATE,
            StftConfig::default(),
            MelConfig::default(),
            MfccConfig::default(),
        )
        .expect("default configuration is valid")
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    pub fn stft(&self) -> &Stft {
        &self.stft
    }

    /// Frames × bins matrix of `log10(max(|X|, ε))`.
    pub fn log_magnitude(&self, samples: &[f64]) -> Result<Matrix> {
        let mut m = self.stft.magnitudes(samples)?;
        for r in 0..m.rows() {
            m.row_mut(r).iter_mut().for_each(|v| *v = v.max(LOG_FLOOR).log10());
        }
        Ok(m)
    }

    /// Frames × mels matrix of `log10(max(mel power, ε))`.
    pub fn log_mel(&self, samples: &[f64]) -> Result<Matrix> {
        let mags = self.stft.magnitudes(samples)?;
        let mut out = Matrix::zeros(mags.rows(), self.filterbank.n_mels());
        let mut power = vec![0.0; mags.cols()];
        for r in 0..mags.rows() {
            for (p, m) in power.iter_mut().zip(mags.row(r)) {
                *p = m * m;
            }
            let dst = out.row_mut(r);
            self.filterbank.apply(&power, dst);
            dst.iter_mut().for_each(|v| *v = v.max(LOG_FLOOR).log10());
        }
        Ok(out)
    }

    /// Frames × `n_coeffs` cepstra (orthonormal DCT-II of the log-mel frames).
    pub fn cepstra(&self, samples: &[f64]) -> Result<Matrix> {
        let logmel = self.log_mel(samples)?;
        let n = self.mfcc.n_coeffs;
        let mut out = Matrix::zeros(logmel.rows(), n);
        for r in 0..logmel.rows() {
            let frame = logmel.row(r);
            for (k, c) in out.row_mut(r).iter_mut().enumerate() {
                *c = self.dct.row(k).iter().zip(frame).map(|(a, b)| a * b).sum();
            }
        }
        Ok(out)
    }

    /// Frames × dim matrix of cepstra followed by deltas and delta-deltas.
    pub fn mfcc_frames(&self, samples: &[f64]) -> Result<Matrix> {
        let cep = self.cepstra(samples)?;
        let need = 2 * self.mfcc.delta_window + 1;
        if (self.mfcc.include_deltas || self.mfcc.include_delta_deltas) && cep.rows() < need {
            return Err(Error::TooShort {
                needed: need,
                got: cep.rows(),
                unit: "frames",
            });
        }
        let mut blocks = vec![cep.clone()];
        if self.mfcc.include_deltas || self.mfcc.include_delta_deltas {
            let d = deltas(&cep, self.mfcc.delta_window);
            if self.mfcc.include_delta_deltas {
                let dd = deltas(&d, self.mfcc.delta_window);
                if self.mfcc.include_deltas {
                    blocks.push(d);
                }
                blocks.push(dd);
            } else {
                blocks.push(d);
            }
        }
        let dim: usize = blocks.iter().map(Matrix::cols).sum();
        let mut out = Matrix::zeros(cep.rows(), dim);
        for r in 0..cep.rows() {
            let mut off = 0;
            for b in &blocks {
                out.row_mut(r)[off..off + b.cols()].copy_from_slice(b.row(r));
                off += b.cols();
            }
        }
        Ok(out)
    }

    pub fn spectrogram_feature(&self, samples: &[f64]) -> Result<FeatureVector> {
        let m = self.log_magnitude(samples)?;
        FeatureVector::new(FeatureKind::Spectrogram, None, None, m.column_means())
    }

    pub fn mel_feature(&self, samples: &[f64]) -> Result<FeatureVector> {
        let m = self.log_mel(samples)?;
        FeatureVector::new(FeatureKind::MelSpectrogram, None, None, m.column_means())
    }

    pub fn mfcc_feature(&self, samples: &[f64]) -> Result<FeatureVector> {
        let m = self.mfcc_frames(samples)?;
        FeatureVector::new(FeatureKind::Mfcc, None, None, m.column_means())
    }

    /// Dispatches on a baseline kind.
    pub fn feature(&self, kind: FeatureKind, samples: &[f64]) -> Result<FeatureVector> {
        match kind {
            FeatureKind::Spectrogram => self.spectrogram_feature(samples),
            FeatureKind::MelSpectrogram => self.mel_feature(samples),
            FeatureKind::Mfcc => self.mfcc_feature(samples),
            FeatureKind::Embedding => Err(Error::Config(
                "embeddings come from a feature store, not from audio".into(),
            )),
        }
    }
}

pub fn stft_log_magnitude(clip: &AudioClip, cfg: &StftConfig) -> Result<Matrix> {
    let ex = BaselineExtractor::new(clip.sample_rate(), *cfg, MelConfig::default(), MfccConfig::default())?;
    ex.log_magnitude(clip.samples())
}

pub fn spectrogram_feature(clip: &AudioClip, cfg: &StftConfig) -> Result<FeatureVector> {
    let ex = BaselineExtractor::new(clip.sample_rate(), *cfg, MelConfig::default(), MfccConfig::default())?;
    ex.spectrogram_feature(clip.samples())
}

pub fn mel_feature(clip: &AudioClip, stft: &StftConfig, mel: &MelConfig) -> Result<FeatureVector> {
    let ex = BaselineExtractor::new(clip.sample_rate(), *stft, *mel, MfccConfig::default())?;
    ex.mel_feature(clip.samples())
}

pub fn mfcc_feature(
    clip: &AudioClip,
    stft: &StftConfig,
    mel: &MelConfig,
    mfcc: &MfccConfig,
) -> Result<FeatureVector> {
    let ex = BaselineExtractor::new(clip.sample_rate(), *stft, *mel, *mfcc)?;
    ex.mfcc_feature(clip.samples())
}
