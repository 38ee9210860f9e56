#![allow(dead_code)]

use std::fs::File;
use std::path::{Path, PathBuf};

use phonation::corpus::{write_manifest, write_wav_f32};
use phonation::embed::{write_store, LayerEmbeddingSet, ModelSpec};
use phonation::{ClipMeta, PhonationMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn meta(id: &str, path: PathBuf, label: PhonationMode) -> ClipMeta {
    ClipMeta {
        id: id.to_string(),
        path,
        label,
        vowel: "a".into(),
        pitch: "A4".into(),
    }
}

pub fn save_manifest(dir: &Path, metas: &[ClipMeta]) -> PathBuf {
    let p = dir.join("manifest.csv");
    write_manifest(File::create(&p).unwrap(), metas).unwrap();
    p
}

/// Harmonic tones whose spectral tilt and noise depend on the class.
pub fn synth_corpus(dir: &Path, per_class: usize, seconds: f64) -> (PathBuf, Vec<ClipMeta>) {
    let sr = 16_000u32;
    let n = (seconds * sr as f64) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut metas = Vec::new();
    for (c, &mode) in PhonationMode::ALL.iter().enumerate() {
        for i in 0..per_class {
            let id = format!("{}_{i:02}", mode.as_str());
            let f0 = 220.0 + 20.0 * i as f64;
            let tilt = 0.4 + 0.5 * c as f64;
            let noise = 0.05 * (3 - c) as f64;
            let samples: Vec<f64> = (0..n)
                .map(|t| {
                    let time = t as f64 / sr as f64;
                    let tone: f64 = (1..=12)
                        .map(|h| (2.0 * std::f64::consts::PI * f0 * h as f64 * time).sin() / (h as f64).powf(2.0 - tilt))
                        .sum();
                    tone + noise * rng.sample::<f64, _>(StandardNormal)
                })
                .collect();
            let path = dir.join(format!("{id}.wav"));
            write_wav_f32(&path, sr, &samples).unwrap();
            metas.push(meta(&id, path, mode));
        }
    }
    (save_manifest(dir, &metas), metas)
}

/// Manifest whose clips exist only as empty placeholder files, for store-only runs.
pub fn placeholder_manifest(dir: &Path, labels: &[(String, PhonationMode)]) -> PathBuf {
    let metas: Vec<ClipMeta> = labels
        .iter()
        .map(|(id, m)| {
            let p = dir.join(format!("{id}.wav"));
            File::create(&p).unwrap();
            meta(id, p, *m)
        })
        .collect();
    save_manifest(dir, &metas)
}

/// Class means on random orthonormal directions, `sep` standard deviations apart.
pub fn class_means(dim: usize, sep: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while basis.len() < 4 {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        basis.push(v.into_iter().map(|x| x / norm).collect());
    }
    // orthonormal directions scaled by sep/√2 sit sep apart pairwise
    basis
        .into_iter()
        .map(|b| b.into_iter().map(|x| x * sep / 2f64.sqrt()).collect())
        .collect()
}

/// Pooled store of Gaussian pseudo-embeddings; every layer gets fresh means.
pub fn blob_store(
    path: &Path,
    model: &ModelSpec,
    per_class: usize,
    sep: f64,
    seed: u64,
) -> Vec<(String, PhonationMode)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<Vec<Vec<f64>>> = (0..model.vector_count())
        .map(|_| class_means(model.hidden_dim, sep, &mut rng))
        .collect();
    let mut labels = Vec::new();
    let mut sets = Vec::new();
    for (c, &mode) in PhonationMode::ALL.iter().enumerate() {
        for i in 0..per_class {
            let id = format!("clip_{c}_{i:03}");
            let rows = means
                .iter()
                .map(|m| {
                    m[c].iter()
                        .map(|mu| (mu + rng.sample::<f64, _>(StandardNormal)) as f32)
                        .collect()
                })
                .collect();
            sets.push(LayerEmbeddingSet::from_pooled(&id, model.clone(), rows).unwrap());
            labels.push((id, mode));
        }
    }
    write_store(path, &sets).unwrap();
    labels
}

pub fn small_grid(dir: &Path) -> PathBuf {
    let p = dir.join("grid.toml");
    std::fs::write(
        &p,
        "[svm]\nc = [1.0, 10.0]\ngamma = [\"1/dim\"]\n\n[xgb]\nn_rounds = [10]\nlearning_rate = [0.3]\nmax_depth = [2]\n",
    )
    .unwrap();
    p
}
