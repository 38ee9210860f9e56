use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::{Error, Result};

/// Decoded PCM data, channels interleaved, scaled to [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct WavData {
    pub sample_rate: u32,
    pub channels: u16,
    pub interleaved: Vec<f64>,
}

impl WavData {
    /// Channel average.
    pub fn mono(&self) -> Vec<f64> {
        let ch = self.channels.max(1) as usize;
        if ch == 1 {
            return self.interleaved.clone();
        }
        self.interleaved
            .chunks_exact(ch)
            .map(|f| f.iter().sum::<f64>() / ch as f64)
            .collect()
    }
}

/// Reads 8/16/24/32-bit integer or 32-bit float PCM.
pub fn read_wav(path: impl AsRef<Path>) -> Result<WavData> {
    let path = path.as_ref();
    let wav_err = |e: hound::Error| Error::Wav {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let reader = WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err)?,
        (SampleFormat::Int, bits @ 1..=32) => {
            let scale = (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(wav_err)?
        }
        (fmt, bits) => {
            return Err(Error::Wav {
                path: path.to_path_buf(),
                message: format!("unsupported sample format {fmt:?} with {bits} bits"),
            })
        }
    };
    Ok(WavData {
        sample_rate: spec.sample_rate,
        channels: spec.channels,
        interleaved,
    })
}

/// Writes mono 32-bit float PCM.
pub fn write_wav_f32(path: impl AsRef<Path>, sample_rate: u32, samples: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let wav_err = |e: hound::Error| Error::Wav {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let spec = WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut w = WavWriter::create(path, spec).map_err(wav_err)?;
    for &s in samples {
        w.write_sample(s as f32).map_err(wav_err)?;
    }
    w.finalize().map_err(wav_err)
}
