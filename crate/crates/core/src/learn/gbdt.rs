//! Softmax gradient boosting with exact greedy regression trees.
//!
//! Every round computes per-class gradients `p − y` and hessians `p(1 − p)` of
//! the multiclass cross-entropy, then fits one tree per class. Splits maximize
//!
//! ```text
//! gain = ½ [G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)]
//! ```
//!
//! over every boundary between distinct sorted feature values, and leaves get
//! the Newton weight `−η·G/(H+λ)`.

use std::cmp::Ordering;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_training_data, Classifier, Standardizer};
use crate::{Error, Matrix, Result};

const MIN_HESSIAN: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbdtParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub l2_leaf_reg: f64,
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_leaf: 1,
            l2_leaf_reg: 1.0,
            subsample: 1.0,
            seed: 0,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_rounds == 0 {
            return Err(Error::Config("n_rounds must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config("learning_rate must be in (0, 1]".into()));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::Config("subsample must be in (0, 1]".into()));
        }
        if self.min_samples_leaf == 0 || !(self.l2_leaf_reg >= 0.0) {
            return Err(Error::Config("min_samples_leaf must be >= 1 and l2_leaf_reg >= 0".into()));
        }
        Ok(())
    }

    fn rule(&self) -> SplitRule {
        SplitRule {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            l2_leaf_reg: self.l2_leaf_reg,
            learning_rate: self.learning_rate,
        }
    }
}

/// Tree-growing constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRule {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub l2_leaf_reg: f64,
    /// Multiplies every leaf weight.
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        gain: f64,
    },
    Leaf { weight: f64, n_samples: usize },
}

/// Nodes in preorder; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

impl RegressionTree {
    /// Fits one tree to per-row gradients/hessians restricted to `rows`.
    pub fn fit(x: &Matrix, rows: &[usize], grad: &[f64], hess: &[f64], rule: &SplitRule) -> Self {
        let cols = columns(x);
        let orders = presort(&cols);
        TreeBuilder::new(&cols, &orders, rows, grad, hess, rule).build()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { weight, .. } => return *weight,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            TreeNode::Leaf { weight, n_samples } => Some((*weight, *n_samples)),
            _ => None,
        })
    }
}

fn columns(x: &Matrix) -> Vec<Vec<f64>> {
    (0..x.cols()).map(|c| (0..x.rows()).map(|r| x.get(r, c)).collect()).collect()
}

/// Row indices of every column sorted by value, ties by row index.
fn presort(cols: &[Vec<f64>]) -> Vec<Vec<u32>> {
    cols.iter()
        .map(|col| {
            let mut idx: Vec<u32> = (0..col.len() as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
            idx
        })
        .collect()
}

struct TreeBuilder<'a> {
    cols: &'a [Vec<f64>],
    grad: &'a [f64],
    hess: &'a [f64],
    rule: &'a SplitRule,
    /// Per feature: node rows sorted by that feature, node segments contiguous.
    orders: Vec<Vec<u32>>,
    go_left: Vec<bool>,
    scratch: Vec<u32>,
    nodes: Vec<TreeNode>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
    n_left: usize,
}

impl<'a> TreeBuilder<'a> {
    fn new(
        cols: &'a [Vec<f64>],
        global_orders: &[Vec<u32>],
        rows: &[usize],
        grad: &'a [f64],
        hess: &'a [f64],
        rule: &'a SplitRule,
    ) -> Self {
        let n_total = cols.first().map_or(rows.len(), Vec::len);
        let mut member = vec![false; n_total];
        rows.iter().for_each(|&r| member[r] = true);
        let orders = global_orders
            .iter()
            .map(|o| o.iter().copied().filter(|&r| member[r as usize]).collect())
            .collect();
        TreeBuilder {
            cols,
            grad,
            hess,
            rule,
            orders,
            go_left: vec![false; n_total],
            scratch: Vec::with_capacity(rows.len()),
            nodes: Vec::new(),
        }
    }

    fn build(mut self) -> RegressionTree {
        let n = self.orders.first().map_or(0, Vec::len);
        if self.orders.is_empty() {
            // no features: a single leaf over all rows is still well defined
            let leaf = TreeNode::Leaf {
                weight: 0.0,
                n_samples: 0,
            };
            return RegressionTree { nodes: vec![leaf] };
        }
        self.grow(0, n, 0);
        RegressionTree { nodes: self.nodes }
    }

    fn leaf_weight(&self, g: f64, h: f64) -> f64 {
        -self.rule.learning_rate * g / (h + self.rule.l2_leaf_reg)
    }

    fn grow(&mut self, start: usize, end: usize, depth: usize) -> usize {
        let (g, h) = self.orders[0][start..end]
            .iter()
            .fold((0.0, 0.0), |(g, h), &r| (g + self.grad[r as usize], h + self.hess[r as usize]));
        let id = self.nodes.len();
        let n = end - start;
        let best = if depth < self.rule.max_depth && n >= 2 * self.rule.min_samples_leaf {
            self.best_split(start, end, g, h)
        } else {
            None
        };
        let Some(best) = best else {
            self.nodes.push(TreeNode::Leaf {
                weight: self.leaf_weight(g, h),
                n_samples: n,
            });
            return id;
        };

        self.nodes.push(TreeNode::Leaf {
            weight: 0.0,
            n_samples: n,
        });
        let col = &self.cols[best.feature];
        for &r in &self.orders[0][start..end] {
            self.go_left[r as usize] = col[r as usize] <= best.threshold;
        }
        for f in 0..self.orders.len() {
            self.scratch.clear();
            let seg = &mut self.orders[f][start..end];
            let mut w = 0;
            for i in 0..seg.len() {
                let r = seg[i];
                if self.go_left[r as usize] {
                    seg[w] = r;
                    w += 1;
                } else {
                    self.scratch.push(r);
                }
            }
            debug_assert_eq!(w, best.n_left);
            seg[w..].copy_from_slice(&self.scratch);
        }
        let mid = start + best.n_left;
        let left = self.grow(start, mid, depth + 1);
        let right = self.grow(mid, end, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            gain: best.gain,
        };
        id
    }

    fn best_split(&self, start: usize, end: usize, g: f64, h: f64) -> Option<Candidate> {
        let lambda = self.rule.l2_leaf_reg;
        let min_leaf = self.rule.min_samples_leaf;
        let parent = g * g / (h + lambda);
        let n = end - start;
        let mut best: Option<Candidate> = None;
        let mut best_gain = 0.0;
        for (f, order) in self.orders.iter().enumerate() {
            let col = &self.cols[f];
            let seg = &order[start..end];
            let (mut gl, mut hl) = (0.0, 0.0);
            for p in 1..n {
                let prev = seg[p - 1] as usize;
                gl += self.grad[prev];
                hl += self.hess[prev];
                if p < min_leaf || n - p < min_leaf {
                    continue;
                }
                let (lo, hi) = (col[prev], col[seg[p] as usize]);
                if lo >= hi {
                    continue;
                }
                let (gr, hr) = (g - gl, h - hl);
                let gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent);
                if gain > best_gain {
                    best_gain = gain;
                    best = Some(Candidate {
                        feature: f,
                        threshold: split_threshold(lo, hi),
                        gain,
                        n_left: p,
                    });
                }
            }
        }
        best
    }
}

/// Midpoint of two adjacent distinct values, falling back to the lower one
/// when the midpoint rounds up to `hi`.
pub(crate) fn split_threshold(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub params: GbdtParams,
    pub classes: Vec<usize>,
    pub standardizer: Standardizer,
    /// Log class priors of the training data.
    pub base_scores: Vec<f64>,
    /// `rounds × classes` trees.
    pub trees: Vec<Vec<RegressionTree>>,
}

/// Mean multiclass cross-entropy of raw scores (rows × classes) against class positions.
pub fn softmax_loss(scores: &Matrix, y_pos: &[usize]) -> f64 {
    let mut total = 0.0;
    for (r, &t) in y_pos.iter().enumerate() {
        let row = scores.row(r);
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|s| (s - m).exp()).sum::<f64>().ln();
        total += lse - row[t];
    }
    total / y_pos.len().max(1) as f64
}

fn softmax_into(row: &[f64], out: &mut [f64]) {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, s) in out.iter_mut().zip(row) {
        *o = (s - m).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
}

impl GbdtModel {
    pub fn fit(x: &Matrix, y: &[usize], params: &GbdtParams) -> Result<Self> {
        params.validate()?;
        let classes = check_training_data(x, y)?;
        let k = classes.len();
        let n = x.rows();
        let y_pos: Vec<usize> = y.iter().map(|c| classes.binary_search(c).expect("class listed")).collect();

        let standardizer = Standardizer::fit(x);
        let z = standardizer.transform(x)?;
        let cols = columns(&z);
        let orders = presort(&cols);

        let mut counts = vec![0usize; k];
        y_pos.iter().for_each(|&c| counts[c] += 1);
        let base_scores: Vec<f64> = counts.iter().map(|&c| (c as f64 / n as f64).ln()).collect();

        let mut scores = Matrix::zeros(n, k);
        for r in 0..n {
            scores.row_mut(r).copy_from_slice(&base_scores);
        }
        let rule = params.rule();
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let n_sub = ((params.subsample * n as f64).round() as usize).clamp(1, n);
        let mut grad = vec![vec![0.0; n]; k];
        let mut hess = vec![vec![0.0; n]; k];
        let mut prob = vec![0.0; k];
        let mut trees = Vec::with_capacity(params.n_rounds);

        for _ in 0..params.n_rounds {
            let rows: Vec<usize> = if n_sub == n {
                (0..n).collect()
            } else {
                let mut s = sample(&mut rng, n, n_sub).into_vec();
                s.sort_unstable();
                s
            };
            for r in 0..n {
                softmax_into(scores.row(r), &mut prob);
                for c in 0..k {
                    let target = if y_pos[r] == c { 1.0 } else { 0.0 };
                    grad[c][r] = prob[c] - target;
                    hess[c][r] = (prob[c] * (1.0 - prob[c])).max(MIN_HESSIAN);
                }
            }
            let round: Vec<RegressionTree> = (0..k)
                .map(|c| TreeBuilder::new(&cols, &orders, &rows, &grad[c], &hess[c], &rule).build())
                .collect();
            for r in 0..n {
                let zr = z.row(r);
                for (c, t) in round.iter().enumerate() {
                    scores.row_mut(r)[c] += t.predict_row(zr);
                }
            }
            trees.push(round);
        }

        Ok(GbdtModel {
            params: *params,
            classes,
            standardizer,
            base_scores,
            trees,
        })
    }

    pub fn dim(&self) -> usize {
        self.standardizer.dim()
    }

    /// The same model restricted to its first `rounds` boosting rounds.
    pub fn truncated(&self, rounds: usize) -> Self {
        let mut m = self.clone();
        m.trees.truncate(rounds);
        m
    }

    /// Raw additive scores, rows × classes.
    pub fn decision_scores(&self, x: &Matrix) -> Result<Matrix> {
        let z = self.standardizer.transform(x)?;
        let k = self.classes.len();
        let mut out = Matrix::zeros(x.rows(), k);
        for r in 0..x.rows() {
            let zr = z.row(r);
            let dst = out.row_mut(r);
            dst.copy_from_slice(&self.base_scores);
            for round in &self.trees {
                for (c, t) in round.iter().enumerate() {
                    dst[c] += t.predict_row(zr);
                }
            }
        }
        Ok(out)
    }

    /// Argmax of the scores; ties go to the earlier class.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        let s = self.decision_scores(x)?;
        Ok(s.iter_rows()
            .map(|row| {
                let best = (0..row.len())
                    .max_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a)))
                    .expect("at least two classes");
                self.classes[best]
            })
            .collect())
    }

    /// Mean training cross-entropy on `(x, y)`.
    pub fn loss(&self, x: &Matrix, y: &[usize]) -> Result<f64> {
        let s = self.decision_scores(x)?;
        let y_pos = y
            .iter()
            .map(|c| self.classes.binary_search(c).map_err(|_| Error::Config(format!("unknown class {c}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(softmax_loss(&s, &y_pos))
    }
}

/// GBDT classifier family for grid search and cross-validation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Gbdt;

impl Classifier for Gbdt {
    type Params = GbdtParams;
    type Model = GbdtModel;

    fn name(&self) -> &str {
        "xgb"
    }

    fn fit(&self, x: &Matrix, y: &[usize], params: &GbdtParams) -> Result<GbdtModel> {
        GbdtModel::fit(x, y, params)
    }

    fn predict(&self, model: &GbdtModel, x: &Matrix) -> Result<Vec<usize>> {
        model.predict(x)
    }

    /// Fewer rounds, shallower trees, larger leaves, then the remaining fields.
    fn prefer(&self, a: &GbdtParams, b: &GbdtParams) -> Ordering {
        a.n_rounds
            .cmp(&b.n_rounds)
            .then(a.max_depth.cmp(&b.max_depth))
            .then(b.min_samples_leaf.cmp(&a.min_samples_leaf))
            .then(a.learning_rate.total_cmp(&b.learning_rate))
            .then(b.l2_leaf_reg.total_cmp(&a.l2_leaf_reg))
            .then(b.subsample.total_cmp(&a.subsample))
            .then(a.seed.cmp(&b.seed))
    }
}
