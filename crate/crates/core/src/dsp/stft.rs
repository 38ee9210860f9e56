use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::StftConfig;
use crate::{Error, Matrix, Result};

/// Symmetric Hamming window, `0.54 - 0.46 cos(2πn / (N-1))`.
pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// `floor((len - frame_len) / hop) + 1`, or `None` when shorter than one frame.
pub fn frame_count(len: usize, frame_len: usize, hop: usize) -> Option<usize> {
    (len >= frame_len).then(|| (len - frame_len) / hop + 1)
}

pub struct Stft {
    cfg: StftConfig,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl Stft {
    pub fn new(cfg: StftConfig) -> Result<Self> {
        cfg.validate()?;
        let fft = FftPlanner::new().plan_fft_forward(cfg.fft_size);
        Ok(Stft {
            window: hamming(cfg.frame_len),
            cfg,
            fft,
        })
    }

    pub fn config(&self) -> &StftConfig {
        &self.cfg
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// One-sided magnitude spectra, frames × (fft_size/2 + 1).
    pub fn magnitudes(&self, samples: &[f64]) -> Result<Matrix> {
        let StftConfig {
            frame_len,
            hop,
            fft_size,
            ..
        } = self.cfg;
        let frames = frame_count(samples.len(), frame_len, hop).ok_or(Error::TooShort {
            needed: frame_len,
            got: samples.len(),
            unit: "samples",
        })?;
        let bins = self.cfg.n_bins();
        let mut out = Matrix::zeros(frames, bins);
        let mut buf = vec![Complex::new(0.0, 0.0); fft_size];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for f in 0..frames {
            let start = f * hop;
            for (i, b) in buf.iter_mut().enumerate() {
                *b = if i < frame_len {
                    Complex::new(samples[start + i] * self.window[i], 0.0)
                } else {
                    Complex::new(0.0, 0.0)
                };
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (dst, c) in out.row_mut(f).iter_mut().zip(&buf[..bins]) {
                *dst = c.norm();
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_count_formula() {
        assert_eq!(frame_count(399, 400, 80), None);
        assert_eq!(frame_count(400, 400, 80), Some(1));
        assert_eq!(frame_count(479, 400, 80), Some(1));
        assert_eq!(frame_count(480, 400, 80), Some(2));
        for len in 400..3000 {
            let stft = frame_count(len, 400, 80).unwrap();
            // last frame fits, one more would not
            assert!((stft - 1) * 80 + 400 <= len && stft * 80 + 400 > len);
        }
    }

    #[test]
    fn window_is_symmetric_hamming() {
        let w = hamming(400);
        assert!((w[0] - 0.08).abs() < 1e-12 && (w[399] - 0.08).abs() < 1e-12);
        for i in 0..200 {
            assert!((w[i] - w[399 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn parseval_one_sided() {
        let stft = Stft::new(StftConfig::default()).unwrap();
        let x: Vec<f64> = (0..400).map(|i| ((i * 7919) % 113) as f64 / 113.0 - 0.5).collect();
        let mags = stft.magnitudes(&x).unwrap();
        let row = mags.row(0);
        let n = 1024.0;
        // |X0|² + 2Σ|Xk|² + |X_{N/2}|² = N Σ (w x)²
        let one_sided: f64 = row[0] * row[0]
            + 2.0 * row[1..512].iter().map(|m| m * m).sum::<f64>()
            + row[512] * row[512];
        let energy: f64 = x.iter().zip(stft.window()).map(|(a, w)| (a * w).powi(2)).sum();
        assert!(((one_sided / n) - energy).abs() / energy < 1e-6);
    }
}
