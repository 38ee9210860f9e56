//! Polyphase windowed-sinc sample-rate conversion.
//!
//! The interpolation kernel is an ideal low-pass `2·fc·sinc(2·fc·t)` tapered by
//! a Kaiser window, with `fc` placed at 0.9 of the target Nyquist frequency.
//! Kernels are tabulated once per output phase; for rate pairs whose reduced
//! ratio has more than [`MAX_PHASES`] phases the nearest tabulated phase is used.

use crate::{Error, Result};

const MAX_PHASES: u64 = 4096;
/// Kernel zero crossings on each side of the centre.
const ZERO_CROSSINGS: f64 = 32.0;
const MIN_HALF_TAPS: usize = 32;
const KAISER_BETA: f64 = 8.6;
const CUTOFF: f64 = 0.9;

#[derive(Debug, Clone)]
pub struct SincResampler {
    from: u32,
    to: u32,
    half: usize,
    phases: u64,
    /// `phases` rows of `2 * half` weights; tap `j` multiplies input `i0 - half + 1 + j`.
    table: Vec<f64>,
}

impl SincResampler {
    pub fn new(from: u32, to: u32) -> Result<Self> {
        if from == 0 || to == 0 || from < to {
            return Err(Error::UnsupportedRate { from, to });
        }
        let g = gcd(from as u64, to as u64);
        let phases = (to as u64 / g).min(MAX_PHASES);
        // cycles per input sample
        let fc = CUTOFF * 0.5 * to as f64 / from as f64;
        let half = ((ZERO_CROSSINGS / (2.0 * fc)).ceil() as usize).max(MIN_HALF_TAPS);
        let taps = 2 * half;
        let i0_beta = bessel_i0(KAISER_BETA);

        let mut table = vec![0.0; phases as usize * taps];
        for p in 0..phases as usize {
            let frac = p as f64 / phases as f64;
            let row = &mut table[p * taps..(p + 1) * taps];
            for (j, w) in row.iter_mut().enumerate() {
                // distance from the output instant to this input sample
                let t = frac + half as f64 - 1.0 - j as f64;
                let u = t / half as f64;
                if u.abs() >= 1.0 {
                    continue;
                }
                let window = bessel_i0(KAISER_BETA * (1.0 - u * u).sqrt()) / i0_beta;
                *w = 2.0 * fc * sinc(2.0 * fc * t) * window;
            }
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|w| *w /= sum);
        }
        Ok(SincResampler {
            from,
            to,
            half,
            phases,
            table,
        })
    }

    /// Taps per output sample.
    pub fn taps(&self) -> usize {
        2 * self.half
    }

    /// Low-pass cutoff in Hz.
    pub fn cutoff_hz(&self) -> f64 {
        CUTOFF * 0.5 * self.to as f64
    }

    /// Number of output samples produced for `n` input samples.
    pub fn output_len(&self, n: usize) -> usize {
        let (n, from, to) = (n as u128, self.from as u128, self.to as u128);
        ((n * to + from / 2) / from) as usize
    }

    pub fn process(&self, input: &[f64]) -> Vec<f64> {
        let out_len = self.output_len(input.len());
        let taps = self.taps();
        let (from, to) = (self.from as u64, self.to as u64);
        let mut out = Vec::with_capacity(out_len);
        for n in 0..out_len as u64 {
            let pos = n * from;
            let mut i0 = (pos / to) as i64;
            let rem = pos % to;
            let mut phase = (rem * self.phases + to / 2) / to;
            if phase == self.phases {
                phase = 0;
                i0 += 1;
            }
            let row = &self.table[phase as usize * taps..(phase as usize + 1) * taps];
            let start = i0 - self.half as i64 + 1;
            let mut acc = 0.0;
            for (j, w) in row.iter().enumerate() {
                let k = start + j as i64;
                if k >= 0 && (k as usize) < input.len() {
                    acc += w * input[k as usize];
                }
            }
            out.push(acc);
        }
        out
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= half / k as f64;
        let t2 = term * term;
        sum += t2;
        if t2 < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
