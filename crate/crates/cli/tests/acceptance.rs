//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Every check compares against an oracle written here, independent of the
//! library internals.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use phonation::dsp::{hz_to_mel, mel_to_hz, BaselineExtractor};
use phonation::embed::{write_store, FeatureStore, LayerEmbeddingSet, ModelSpec};
use phonation::evaluate::{cross_validate, stratified_fold_indices, stratified_folds};
use phonation::learn::{
    solve_smo, GbdtModel, GbdtParams, RegressionTree, SplitRule, SvmModel, SvmParams, TreeNode,
};
use phonation::{FeatureKind, FeatureVector, Matrix, PhonationMode};
use phonation_cli::{cmd_evaluate, cmd_sweep, ClassifierChoice, EvaluateConfig, GridConfig, SweepConfig};
use phonation::learn::KernelKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Outcome;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

// ---------------------------------------------------------------- DSP oracle

const SR: f64 = 16_000.0;
const FRAME: usize = 400;
const HOP: usize = 80;
const NFFT: usize = 1024;
const BINS: usize = 513;
const N_MELS: usize = 80;

fn oracle_hamming(i: usize) -> f64 {
    0.54 - 0.46 * (2.0 * PI * i as f64 / (FRAME - 1) as f64).cos()
}

/// Per-frame magnitudes by a direct DFT sum over the windowed frame.
fn oracle_magnitudes(x: &[f64]) -> Vec<Vec<f64>> {
    let frames = (x.len() - FRAME) / HOP + 1;
    let (cos, sin): (Vec<f64>, Vec<f64>) = (0..NFFT)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / NFFT as f64;
            (a.cos(), a.sin())
        })
        .unzip();
    (0..frames)
        .map(|f| {
            let seg: Vec<f64> = (0..FRAME).map(|n| x[f * HOP + n] * oracle_hamming(n)).collect();
            (0..BINS)
                .map(|k| {
                    let (mut re, mut im) = (0.0, 0.0);
                    for (n, v) in seg.iter().enumerate() {
                        let j = (k * n) % NFFT;
                        re += v * cos[j];
                        im -= v * sin[j];
                    }
                    (re * re + im * im).sqrt()
                })
                .collect()
        })
        .collect()
}

fn oracle_triangle(m: usize, hz: f64) -> f64 {
    let lo_mel = hz_to_mel(0.0);
    let hi_mel = hz_to_mel(8000.0);
    let edge = |i: usize| {
        if i == 0 {
            0.0
        } else if i == N_MELS + 1 {
            8000.0
        } else {
            mel_to_hz(lo_mel + (hi_mel - lo_mel) * i as f64 / (N_MELS + 1) as f64)
        }
    };
    let (a, b, c) = (edge(m), edge(m + 1), edge(m + 2));
    if hz <= a || hz >= c {
        0.0
    } else if hz <= b {
        (hz - a) / (b - a)
    } else {
        (c - hz) / (c - b)
    }
}

fn oracle_features(x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mags = oracle_magnitudes(x);
    let spec: Vec<Vec<f64>> = mags.iter().map(|f| f.iter().map(|m| m.max(1e-10).log10()).collect()).collect();
    let mel: Vec<Vec<f64>> = mags
        .iter()
        .map(|f| {
            (0..N_MELS)
                .map(|m| {
                    let p: f64 = (0..BINS).map(|k| oracle_triangle(m, k as f64 * SR / NFFT as f64) * f[k] * f[k]).sum();
                    p.max(1e-10).log10()
                })
                .collect()
        })
        .collect();
    let cep: Vec<Vec<f64>> = mel
        .iter()
        .map(|f| {
            (0..13)
                .map(|k| {
                    let s: f64 = (0..N_MELS)
                        .map(|i| f[i] * (PI * k as f64 * (i as f64 + 0.5) / N_MELS as f64).cos())
                        .sum();
                    s * if k == 0 { (1.0 / N_MELS as f64).sqrt() } else { (2.0 / N_MELS as f64).sqrt() }
                })
                .collect()
        })
        .collect();
    let delta = |c: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        let t_max = c.len() as isize - 1;
        (0..c.len())
            .map(|t| {
                (0..c[0].len())
                    .map(|j| {
                        let at = |d: isize| c[(t as isize + d).clamp(0, t_max) as usize][j];
                        (1.0 * (at(1) - at(-1)) + 2.0 * (at(2) - at(-2))) / 10.0
                    })
                    .collect()
            })
            .collect()
    };
    let d1 = delta(&cep);
    let d2 = delta(&d1);
    let mfcc = (0..cep.len())
        .map(|t| cep[t].iter().chain(&d1[t]).chain(&d2[t]).copied().collect())
        .collect();
    (spec, mel, mfcc)
}

fn test_signals() -> Vec<Vec<f64>> {
    let n = 4000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let t = |i: usize| i as f64 / SR;
    let sine = |f: f64, a: f64| (0..n).map(|i| a * (2.0 * PI * f * t(i)).sin()).collect::<Vec<_>>();
    let chirp = |f0: f64, f1: f64| {
        let dur = n as f64 / SR;
        (0..n)
            .map(|i| (2.0 * PI * (f0 * t(i) + 0.5 * (f1 - f0) / dur * t(i) * t(i))).sin())
            .collect::<Vec<_>>()
    };
    let mut noise = || (0..n).map(|_| rng.sample::<f64, _>(StandardNormal) * 0.3).collect::<Vec<_>>();
    vec![
        sine(440.0, 1.0),
        sine(1000.0, 0.5),
        sine(3210.5, 0.9),
        (0..n).map(|i| (2.0 * PI * 220.0 * t(i)).sin() + 0.3 * (2.0 * PI * 660.0 * t(i)).sin()).collect(),
        chirp(100.0, 4000.0),
        chirp(7000.0, 500.0),
        chirp(50.0, 7900.0),
        noise(),
        noise(),
        sine(7990.0, 0.2),
    ]
}

fn max_err(a: &Matrix, b: &[Vec<f64>]) -> f64 {
    assert_eq!(a.rows(), b.len());
    let mut e: f64 = 0.0;
    for (r, row) in b.iter().enumerate() {
        assert_eq!(a.cols(), row.len());
        for (x, y) in a.row(r).iter().zip(row) {
            e = e.max((x - y).abs());
        }
    }
    e
}

fn column_means(m: &[Vec<f64>]) -> Vec<f64> {
    (0..m[0].len()).map(|j| m.iter().map(|r| r[j]).sum::<f64>() / m.len() as f64).collect()
}

fn dsp_oracle() -> Outcome {
    let start = Instant::now();
    let ex = BaselineExtractor::standard();
    let mut worst: f64 = 0.0;
    for x in test_signals() {
        let (spec, mel, mfcc) = oracle_features(&x);
        worst = worst.max(max_err(&ex.log_magnitude(&x).unwrap(), &spec));
        worst = worst.max(max_err(&ex.log_mel(&x).unwrap(), &mel));
        worst = worst.max(max_err(&ex.mfcc_frames(&x).unwrap(), &mfcc));
        for (kind, frames) in [(FeatureKind::Spectrogram, &spec), (FeatureKind::MelSpectrogram, &mel), (FeatureKind::Mfcc, &mfcc)] {
            let v = ex.feature(kind, &x).unwrap();
            let want = column_means(frames);
            worst = v.values.iter().zip(&want).fold(worst, |w, (a, b)| w.max((a - b).abs()));
        }
    }
    let elapsed = start.elapsed();
    ensure(
        worst <= 1e-6 && elapsed < Duration::from_secs(10),
        format!("10 signals, max abs error {worst:.2e} (tol 1e-6), {:.2} s (limit 10 s)", elapsed.as_secs_f64()),
    )
}

// ------------------------------------------------------- dimensional contracts

fn dimensions() -> Outcome {
    let x: Vec<f64> = (0..16_000).map(|i| (2.0 * PI * 300.0 * i as f64 / SR).sin()).collect();
    let ex = BaselineExtractor::standard();
    let dims: Vec<usize> = [FeatureKind::Spectrogram, FeatureKind::MelSpectrogram, FeatureKind::Mfcc]
        .iter()
        .map(|&k| ex.feature(k, &x).unwrap().dim())
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let mut counts = Vec::new();
    for id in ["wav2vec2-base", "wav2vec2-large", "hubert-large"] {
        let model = ModelSpec::known(id).unwrap();
        let frames = ModelSpec::expected_frames(16_000);
        let sets: Vec<LayerEmbeddingSet> = (0..2)
            .map(|c| {
                let layers = (0..model.vector_count())
                    .map(|l| (0..frames * model.hidden_dim).map(|i| ((i + l + c) % 7) as f32).collect())
                    .collect();
                LayerEmbeddingSet::new(format!("clip{c}"), model.clone(), frames, false, layers).unwrap()
            })
            .collect();
        let path = dir.path().join(format!("{id}.v2me"));
        write_store(&path, &sets).unwrap();
        let store = FeatureStore::open(&path).unwrap();
        let n = store.model().vector_count();
        let every_layer_ok = (0..n).all(|l| {
            store
                .pooled_layer(l)
                .unwrap()
                .iter()
                .all(|(_, v)| v.dim() == model.hidden_dim && v.layer == Some(l))
        });
        assert!(every_layer_ok, "{id}: pooled layer shape");
        assert!(store.pooled_layer(n).is_err(), "{id}: layer past the end");
        counts.push(n);
    }
    ensure(
        dims == [513, 80, 39] && counts == [13, 25, 25] && ModelSpec::expected_frames(16_000) == 49,
        format!("baseline dims {dims:?}, layer vectors {counts:?}, frames per second {}", ModelSpec::expected_frames(16_000)),
    )
}

// ----------------------------------------------------------------------- SVM

fn rbf_kernel(x: &[Vec<f64>], gamma: f64) -> Matrix {
    let n = x.len();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let d: f64 = x[i].iter().zip(&x[j]).map(|(a, b)| (a - b).powi(2)).sum();
            k.row_mut(i)[j] = (-gamma * d).exp();
        }
    }
    k
}

fn svm() -> Outcome {
    // two points: the dual optimum is α = ½, w = (1, 0), b = 0
    let x = Matrix::from_rows(&[[-1.0, 0.0], [1.0, 0.0]]).unwrap();
    let m = SvmModel::fit(&x, &[0, 1], &SvmParams::linear(1.0)).unwrap();
    let mc = &m.machines[0];
    let w = mc.weights.clone().unwrap();
    let two_point = (w[0] - 1.0).abs() < 1e-6
        && w[1].abs() < 1e-6
        && mc.bias.abs() < 1e-6
        && mc.alphas.len() == 2
        && mc.alphas.iter().all(|a| (a - 0.5).abs() < 1e-6);

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut monotone = 0;
    let mut worst_drop: f64 = 0.0;
    for _ in 0..100 {
        let pts: Vec<Vec<f64>> = (0..50).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<f64> = (0..50).map(|i| if i < 25 { 1.0 } else { -1.0 }).collect();
        let c = [0.1, 1.0, 10.0][rng.random_range(0..3)];
        let sol = solve_smo(&rbf_kernel(&pts, 0.5), &y, c, 1e-3, 1_000_000, true);
        let drop = sol.objective_trace.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
        worst_drop = worst_drop.max(drop);
        if sol.converged && drop <= 1e-9 {
            monotone += 1;
        }
    }

    let xor = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]]).unwrap();
    let yx = [0, 0, 1, 1];
    let mut best_xor: f64 = 0.0;
    for c in [0.01, 0.1, 1.0, 10.0, 100.0, 1000.0] {
        let pred = SvmModel::fit(&xor, &yx, &SvmParams::linear(c)).unwrap().predict(&xor).unwrap();
        best_xor = best_xor.max(pred.iter().zip(&yx).filter(|(p, t)| p == t).count() as f64 / 4.0);
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for c in 0..4 {
        for _ in 0..25 {
            let centre = [(c % 2) as f64 * 8.0, (c / 2) as f64 * 8.0];
            rows.push(vec![centre[0] + rng.random_range(-1.0..1.0), centre[1] + rng.random_range(-1.0..1.0)]);
            labels.push(c);
        }
    }
    let bx = Matrix::from_rows(&rows).unwrap();
    let mut blob_acc = Vec::new();
    for p in [SvmParams::linear(1.0), SvmParams::rbf(1.0, 0.5)] {
        let pred = SvmModel::fit(&bx, &labels, &p).unwrap().predict(&bx).unwrap();
        blob_acc.push(pred.iter().zip(&labels).filter(|(p, t)| p == t).count() as f64 / labels.len() as f64);
    }

    ensure(
        two_point && monotone == 100 && best_xor <= 0.75 && blob_acc.iter().all(|&a| a == 1.0),
        format!(
            "two-point dual {}, monotone {monotone}/100 (largest drop {worst_drop:.1e}), XOR linear best {:.0}% (max 75%), blobs {:?}",
            if two_point { "ok" } else { "wrong" },
            100.0 * best_xor,
            blob_acc.iter().map(|a| format!("{:.0}%", 100.0 * a)).collect::<Vec<_>>()
        ),
    )
}

// ---------------------------------------------------------------------- GBDT

/// Exhaustive greedy builder: every feature, every midpoint between distinct
/// sorted values, gains summed from scratch.
struct OracleTree {
    nodes: Vec<OracleNode>,
}

enum OracleNode {
    Split {
        /// Every (feature, threshold) whose gain ties the best within 1e-12.
        best: Vec<(usize, f64)>,
        left: usize,
        right: usize,
    },
    Leaf(f64),
}

fn oracle_tree(x: &[Vec<f64>], rows: &[usize], g: &[f64], h: &[f64], rule: &SplitRule) -> OracleTree {
    fn score(gs: f64, hs: f64, lambda: f64) -> f64 {
        gs * gs / (hs + lambda)
    }
    fn build(
        x: &[Vec<f64>],
        rows: &[usize],
        g: &[f64],
        h: &[f64],
        rule: &SplitRule,
        depth: usize,
        nodes: &mut Vec<OracleNode>,
    ) -> usize {
        let gs: f64 = rows.iter().map(|&r| g[r]).sum();
        let hs: f64 = rows.iter().map(|&r| h[r]).sum();
        let id = nodes.len();
        nodes.push(OracleNode::Leaf(-rule.learning_rate * gs / (hs + rule.l2_leaf_reg)));
        if depth >= rule.max_depth {
            return id;
        }
        let mut cands: Vec<(f64, usize, f64)> = Vec::new();
        for f in 0..x[0].len() {
            let mut vals: Vec<f64> = rows.iter().map(|&r| x[r][f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let mid = w[0] + (w[1] - w[0]) / 2.0;
                let thr = if mid < w[1] { mid } else { w[0] };
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][f] <= thr);
                if l.len() < rule.min_samples_leaf || r.len() < rule.min_samples_leaf {
                    continue;
                }
                let gl: f64 = l.iter().map(|&i| g[i]).sum();
                let hl: f64 = l.iter().map(|&i| h[i]).sum();
                let gain = 0.5
                    * (score(gl, hl, rule.l2_leaf_reg) + score(gs - gl, hs - hl, rule.l2_leaf_reg)
                        - score(gs, hs, rule.l2_leaf_reg));
                cands.push((gain, f, thr));
            }
        }
        let top = cands.iter().map(|c| c.0).fold(0.0, f64::max);
        if top <= 0.0 {
            return id;
        }
        let best: Vec<(usize, f64)> = cands
            .iter()
            .filter(|c| c.0 >= top - 1e-12 * (1.0 + top))
            .map(|c| (c.1, c.2))
            .collect();
        let (f, thr) = best[0];
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][f] <= thr);
        let left = build(x, &l, g, h, rule, depth + 1, nodes);
        let right = build(x, &r, g, h, rule, depth + 1, nodes);
        nodes[id] = OracleNode::Split { best, left, right };
        id
    }
    let mut nodes = Vec::new();
    build(x, rows, g, h, rule, 0, &mut nodes);
    OracleTree { nodes }
}

/// Walks both trees together; true when every split is one of the oracle's
/// best candidates and every leaf weight agrees within 1e-9.
fn same_tree(t: &RegressionTree, o: &OracleTree, exact: &mut usize, total: &mut usize) -> bool {
    fn walk(t: &RegressionTree, i: usize, o: &OracleTree, j: usize, exact: &mut usize, total: &mut usize) -> bool {
        match (&t.nodes[i], &o.nodes[j]) {
            (TreeNode::Leaf { weight, .. }, OracleNode::Leaf(w)) => (weight - w).abs() <= 1e-9,
            (
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                },
                OracleNode::Split { best, left: ol, right: or },
            ) => {
                *total += 1;
                if best[0] == (*feature, *threshold) {
                    *exact += 1;
                } else if !best.contains(&(*feature, *threshold)) {
                    return false;
                }
                walk(t, *left, o, *ol, exact, total) && walk(t, *right, o, *or, exact, total)
            }
            _ => false,
        }
    }
    walk(t, 0, o, 0, exact, total)
}

fn gbdt() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut identical = 0;
    let mut exact = 0;
    let mut total = 0;
    let datasets = 50;
    for d in 0..datasets {
        let nf = 1 + d % 4;
        // some datasets use coarse values so ties between thresholds occur
        let coarse = d % 3 == 0;
        let x: Vec<Vec<f64>> = (0..20)
            .map(|_| {
                (0..nf)
                    .map(|_| {
                        let v: f64 = rng.random_range(-1.0..1.0);
                        if coarse { (v * 3.0).round() } else { v }
                    })
                    .collect()
            })
            .collect();
        let g: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..20).map(|_| rng.random_range(0.05..0.25)).collect();
        let rule = SplitRule {
            max_depth: 1 + d % 3,
            min_samples_leaf: 1 + d % 2,
            l2_leaf_reg: [0.0, 1.0][d % 2],
            learning_rate: 0.3,
        };
        let rows: Vec<usize> = (0..20).collect();
        let m = Matrix::from_rows(&x).unwrap();
        let tree = RegressionTree::fit(&m, &rows, &g, &h, &rule);
        let oracle = oracle_tree(&x, &rows, &g, &h, &rule);
        if same_tree(&tree, &oracle, &mut exact, &mut total) {
            identical += 1;
        }
    }

    // loss monotonicity over boosting rounds
    let mut worst_rise: f64 = f64::NEG_INFINITY;
    let mut runs = 0;
    for seed in 0..6u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let rows: Vec<Vec<f64>> = (0..120).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y: Vec<usize> = rows
            .iter()
            .map(|r| {
                let s = r[0] + 0.5 * r[1] * r[2] + 0.2 * rng.random_range(-1.0..1.0);
                if s < -0.5 { 0 } else if s < 0.0 { 1 } else if s < 0.5 { 2 } else { 3 }
            })
            .collect();
        let xm = Matrix::from_rows(&rows).unwrap();
        for (lr, depth) in [(0.1, 3), (0.3, 6), (1.0, 2)] {
            let p = GbdtParams {
                n_rounds: 30,
                learning_rate: lr,
                max_depth: depth,
                ..Default::default()
            };
            let model = GbdtModel::fit(&xm, &y, &p).unwrap();
            let losses: Vec<f64> = (0..=30).map(|r| model.truncated(r).loss(&xm, &y).unwrap()).collect();
            worst_rise = losses.windows(2).map(|w| w[1] - w[0]).fold(worst_rise, f64::max);
            runs += 1;
            // the prior-only model reproduces the class-prior loss
            let mut counts = [0.0f64; 4];
            y.iter().for_each(|&c| counts[c] += 1.0);
            let prior = -y.iter().map(|&c| (counts[c] / 120.0).ln()).sum::<f64>() / 120.0;
            assert!((losses[0] - prior).abs() < 1e-12);
        }
    }

    ensure(
        identical == datasets && worst_rise <= 1e-9,
        format!(
            "{identical}/{datasets} trees identical to exhaustive oracle ({exact}/{total} splits first-choice), \
             {runs} boosting runs, largest per-round loss increase {worst_rise:.1e} (tol 1e-9)"
        ),
    )
}

// ------------------------------------------------------------------ CV protocol

fn cv_protocol() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(314);
    let mut balanced = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..800);
        let weights: Vec<f64> = (0..4).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let labels: Vec<usize> = (0..n)
            .map(|_| {
                let mut u = rng.random_range(0.0..total);
                let mut c = 0;
                while c < 3 && u >= weights[c] {
                    u -= weights[c];
                    c += 1;
                }
                c
            })
            .collect();
        let k = rng.random_range(2..11);
        let folds = stratified_fold_indices(&labels, k, rng.random()).unwrap();
        let ok = (0..4).all(|c| {
            let mut per = vec![0usize; k];
            labels.iter().zip(&folds).filter(|(l, _)| **l == c).for_each(|(_, &f)| per[f] += 1);
            per.iter().max().unwrap() - per.iter().min().unwrap() <= 1
        }) && folds.iter().all(|&f| f < k);
        balanced += usize::from(ok);
    }

    // full synthetic run, twice
    let mut features = HashMap::new();
    let mut labels = BTreeMap::new();
    let means = common::class_means(8, 2.5, &mut rng);
    for c in 0..4 {
        for i in 0..23 + c {
            let id = format!("s{c}_{i}");
            let v: Vec<f64> = means[c].iter().map(|m| m + rng.sample::<f64, _>(StandardNormal)).collect();
            features.insert(id.clone(), FeatureVector::new(FeatureKind::Embedding, None, None, v).unwrap());
            labels.insert(id, PhonationMode::ALL[c]);
        }
    }
    let grid: Vec<SvmParams> = [0.1, 1.0, 10.0]
        .iter()
        .flat_map(|&c| [0.05, 0.125].map(|g| SvmParams::rbf(c, g)))
        .collect();
    let run = || {
        let split = stratified_folds(&labels, 5, 42).unwrap();
        let r = cross_validate(&phonation::learn::Svm, &grid, &features, &labels, &split).unwrap();
        (split, r)
    };
    let (split_a, a) = run();
    let (split_b, b) = run();
    let reproducible = split_a == split_b && serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap();

    let correct: u64 = a.fold_accuracies.iter().zip(&a.fold_sizes).map(|(acc, &n)| (acc * n as f64).round() as u64).sum();
    let n_total: usize = a.fold_sizes.iter().sum();
    let weighted: f64 = a.fold_accuracies.iter().zip(&a.fold_sizes).map(|(acc, &n)| acc * n as f64).sum::<f64>() / n_total as f64;
    let identity = a.confusion.total() as usize == labels.len()
        && n_total == labels.len()
        && a.confusion.trace() == correct
        && (a.confusion.accuracy() - weighted).abs() < 1e-15;

    ensure(
        balanced == 200 && reproducible && identity,
        format!(
            "balance ±1 on {balanced}/200 label multisets, bit-reproducible {reproducible}, \
             confusion trace {}/{} = weighted fold accuracy {identity}",
            a.confusion.trace(),
            a.confusion.total()
        ),
    )
}

// ----------------------------------------------------------------- end to end

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("hubert.v2me");
    let model = ModelSpec::known("hubert-large").unwrap();
    let labels = common::blob_store(&store, &model, 50, 10.0, 1234);
    let manifest = common::placeholder_manifest(dir.path(), &labels);
    let cfg = SweepConfig {
        manifest,
        out: dir.path().join("out"),
        seed: 42,
        k: 5,
        stores: vec![store],
        classifiers: vec![ClassifierChoice::Svm],
        kernel: KernelKind::Rbf,
        grids: GridConfig::default(),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let sweeps = pool.install(|| cmd_sweep(&cfg)).unwrap();
    let elapsed = start.elapsed();
    let s = &sweeps[0];
    let worst = s.reports.iter().map(|r| r.mean_accuracy).fold(1.0, f64::min);
    ensure(
        s.reports.len() == 25 && worst >= 0.99 && elapsed < Duration::from_secs(60),
        format!(
            "200 clips x 1024-D x 25 layers, lowest layer mean {:.1}% (min 99%), {:.1} s single-threaded (limit 60 s)",
            100.0 * worst,
            elapsed.as_secs_f64()
        ),
    )
}

// ------------------------------------------------------------- real corpus

fn soprano_corpus() -> Outcome {
    let Ok(manifest) = std::env::var("V2M_SOPRANO_MANIFEST") else {
        return Outcome::Skip("set V2M_SOPRANO_MANIFEST to the corpus manifest to run".into());
    };
    let dir = tempfile::tempdir().unwrap();
    let cfg = EvaluateConfig {
        manifest: manifest.into(),
        out: dir.path().to_path_buf(),
        seed: 42,
        k: 5,
        kinds: vec![FeatureKind::Spectrogram, FeatureKind::Mfcc],
        stores: vec![],
        layers: None,
        classifiers: vec![ClassifierChoice::Svm],
        kernel: KernelKind::Rbf,
        grids: GridConfig::default(),
    };
    let reports = match cmd_evaluate(&cfg) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(format!("{e:#}")),
    };
    let spec = 100.0 * reports[0].mean_accuracy;
    let mfcc = 100.0 * reports[1].mean_accuracy;
    ensure(
        (spec - 79.9).abs() <= 5.0 && mfcc < spec,
        format!("spectrogram {spec:.1}% (target 79.9 ± 5.0), mfcc {mfcc:.1}% (must be below spectrogram)"),
    )
}

fn main() {
    let checks: [(&str, Check); 7] = [
        ("dsp-oracle-equivalence", dsp_oracle),
        ("dimensional-contracts", dimensions),
        ("svm-correctness", svm),
        ("gbdt-correctness", gbdt),
        ("cv-protocol", cv_protocol),
        ("end-to-end-synthetic", end_to_end),
        ("soprano-corpus", soprano_corpus),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::Fail(format!("panicked: {msg}"))
        });
        match outcome {
            Outcome::Pass(d) => println!("PASS  {name}: {d}"),
            Outcome::Skip(d) => println!("SKIP  {name}: {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("FAIL  {name}: {d}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
