use super::MelConfig;
use crate::Matrix;

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters equally spaced on the mel scale, peak value 1, no area
/// normalization.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// `n_mels + 2` band edges in Hz; filter `m` spans `edges[m]..edges[m+2]`.
    edges_hz: Vec<f64>,
    weights: Matrix,
    bin_hz: f64,
}

impl MelFilterbank {
    pub fn new(cfg: &MelConfig, sample_rate: u32, fft_size: usize) -> Self {
        let (lo, hi) = (hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax));
        let n_points = cfg.n_mels + 2;
        let mut edges_hz: Vec<f64> = (0..n_points)
            .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_points - 1) as f64))
            .collect();
        edges_hz[0] = cfg.fmin;
        edges_hz[n_points - 1] = cfg.fmax;
        let n_bins = fft_size / 2 + 1;
        let bin_hz = sample_rate as f64 / fft_size as f64;
        let mut fb = MelFilterbank {
            edges_hz,
            weights: Matrix::zeros(cfg.n_mels, n_bins),
            bin_hz,
        };
        for m in 0..cfg.n_mels {
            for k in 0..n_bins {
                let w = fb.triangle(m, k as f64 * bin_hz);
                fb.weights.row_mut(m)[k] = w;
            }
        }
        fb
    }

    pub fn n_mels(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn edges_hz(&self) -> &[f64] {
        &self.edges_hz
    }

    pub fn center_hz(&self, m: usize) -> f64 {
        self.edges_hz[m + 1]
    }

    pub fn bin_hz(&self) -> f64 {
        self.bin_hz
    }

    /// Continuous response of filter `m` at `hz`; equals 1 at the centre.
    pub fn triangle(&self, m: usize, hz: f64) -> f64 {
        let (l, c, r) = (self.edges_hz[m], self.edges_hz[m + 1], self.edges_hz[m + 2]);
        if hz <= l || hz >= r {
            0.0
        } else if hz <= c {
            (hz - l) / (c - l)
        } else {
            (r - hz) / (r - c)
        }
    }

    /// `out[m] = Σ_k W[m, k] · spectrum[k]`.
    pub fn apply(&self, spectrum: &[f64], out: &mut [f64]) {
        for (m, o) in out.iter_mut().enumerate() {
            *o = self.weights.row(m).iter().zip(spectrum).map(|(w, s)| w * s).sum();
        }
    }
}
