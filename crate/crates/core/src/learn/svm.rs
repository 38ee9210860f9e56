//! Support vector classification.
//!
//! Each binary machine solves the soft-margin dual
//!
//! ```text
//! min_α  ½ αᵀQα − eᵀα   s.t.  yᵀα = 0,  0 ≤ αᵢ ≤ C,   Qᵢⱼ = yᵢyⱼK(xᵢ, xⱼ)
//! ```
//!
//! with SMO, choosing the maximal violating pair at every step and stopping
//! once the KKT gap `max_{I_up} −yG − min_{I_low} −yG` drops below `tol`.
//! Multiclass problems are reduced one-vs-one.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{check_training_data, Classifier, Standardizer};
use crate::{Error, Matrix, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub kernel: KernelKind,
    pub c: f64,
    /// RBF width, `K(a, b) = exp(−γ‖a − b‖²)`; ignored by the linear kernel.
    pub gamma: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            kernel: KernelKind::Rbf,
            c: 1.0,
            gamma: 1e-3,
            tol: 1e-3,
            max_iters: 1_000_000,
        }
    }
}

impl SvmParams {
    pub fn linear(c: f64) -> Self {
        SvmParams {
            kernel: KernelKind::Linear,
            c,
            gamma: 0.0,
            ..Default::default()
        }
    }

    pub fn rbf(c: f64, gamma: f64) -> Self {
        SvmParams {
            kernel: KernelKind::Rbf,
            c,
            gamma,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if self.kernel == KernelKind::Rbf && !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(Error::Config("tol and max_iters must be positive".into()));
        }
        Ok(())
    }

    fn kernel_from_dot(&self, dot: f64, sq_a: f64, sq_b: f64) -> f64 {
        match self.kernel {
            KernelKind::Linear => dot,
            KernelKind::Rbf => (-self.gamma * (sq_a + sq_b - 2.0 * dot).max(0.0)).exp(),
        }
    }

    fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kernel {
            KernelKind::Linear => dot(a, b),
            KernelKind::Rbf => {
                let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                (-self.gamma * d2).exp()
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Result of one binary SMO run.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Offset such that `f(x) = Σ αᵢyᵢK(xᵢ, x) − rho`.
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final maximal KKT violation.
    pub kkt_gap: f64,
    /// Dual objective `Σα − ½αᵀQα` after every accepted step (when requested).
    pub objective_trace: Vec<f64>,
}

/// Solves one binary dual given the full kernel matrix and ±1 targets.
pub fn solve_smo(
    kernel: &Matrix,
    y: &[f64],
    c: f64,
    tol: f64,
    max_iters: usize,
    record_objective: bool,
) -> SmoSolution {
    let n = y.len();
    debug_assert_eq!(kernel.rows(), n);
    let mut alpha = vec![0.0; n];
    // G = Qα − e
    let mut grad = vec![-1.0; n];
    let mut trace = Vec::new();
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    let mut gap;
    loop {
        let mut i = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut g_min = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > g_max {
                g_max = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < g_min {
                g_min = v;
                j = t;
            }
        }
        gap = if i == usize::MAX || j == usize::MAX { 0.0 } else { g_max - g_min };
        if gap <= tol || iterations >= max_iters {
            break;
        }

        let eta = {
            let e = kernel.get(i, i) + kernel.get(j, j) - 2.0 * kernel.get(i, j);
            if e > 0.0 {
                e
            } else {
                TAU
            }
        };
        let mut step = gap / eta;
        let bound_i = if y[i] > 0.0 { c - alpha[i] } else { alpha[i] };
        let bound_j = if y[j] > 0.0 { alpha[j] } else { c - alpha[j] };
        step = step.min(bound_i).min(bound_j);

        // α_i moves by y_i·step, α_j by −y_j·step; snap to the box exactly when clipped.
        alpha[i] = if step == bound_i {
            if y[i] > 0.0 { c } else { 0.0 }
        } else {
            alpha[i] + y[i] * step
        };
        alpha[j] = if step == bound_j {
            if y[j] > 0.0 { 0.0 } else { c }
        } else {
            alpha[j] - y[j] * step
        };
        for t in 0..n {
            grad[t] += y[t] * step * (kernel.get(t, i) - kernel.get(t, j));
        }
        iterations += 1;
        if record_objective {
            trace.push(alpha.iter().zip(&grad).map(|(a, g)| 0.5 * a * (1.0 - g)).sum());
        }
    }

    let converged = gap <= tol;
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations with KKT gap {gap:.3e} > {tol:.1e}");
    }

    // offset from free multipliers, or the midpoint of the feasible interval
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            sum_free += yg;
            n_free += 1;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };

    SmoSolution {
        alpha,
        rho,
        iterations,
        converged,
        kkt_gap: gap,
        objective_trace: trace,
    }
}

/// One pairwise machine; positive decisions vote for `positive`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMachine {
    pub positive: usize,
    pub negative: usize,
    /// Support vectors in standardized space.
    pub support_vectors: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    /// `αᵢ yᵢ` for each support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    /// Explicit primal weights `Σ αᵢyᵢxᵢ` (linear kernel only).
    pub weights: Option<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_gap: f64,
}

impl BinaryMachine {
    /// Decision value via the kernel expansion.
    pub fn decision_expansion(&self, params: &SvmParams, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, a)| a * params.kernel(sv, x))
            .sum::<f64>()
            + self.bias
    }

    pub fn decision(&self, params: &SvmParams, x: &[f64]) -> f64 {
        match &self.weights {
            Some(w) => dot(w, x) + self.bias,
            None => self.decision_expansion(params, x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub params: SvmParams,
    pub classes: Vec<usize>,
    pub standardizer: Standardizer,
    pub machines: Vec<BinaryMachine>,
}

struct PairSolution {
    positive: usize,
    negative: usize,
    idx: Vec<usize>,
    targets: Vec<f64>,
    sol: SmoSolution,
}

/// One-vs-one vote over `(positive, negative)` machines. A zero decision casts
/// no vote; ties go to the larger summed signed decision value, then to the
/// earlier class.
fn vote(classes: &[usize], pairs: impl Iterator<Item = (usize, usize)>, dec: &[f64]) -> usize {
    let k = classes.len();
    let pos_of = |c: usize| classes.binary_search(&c).expect("machine class in class list");
    let mut votes = vec![0usize; k];
    let mut sums = vec![0.0f64; k];
    for ((pos, neg), d) in pairs.zip(dec) {
        let (p, n) = (pos_of(pos), pos_of(neg));
        sums[p] += d;
        sums[n] -= d;
        if *d > 0.0 {
            votes[p] += 1;
        } else if *d < 0.0 {
            votes[n] += 1;
        }
    }
    let best = (0..k)
        .max_by(|&a, &b| votes[a].cmp(&votes[b]).then(sums[a].total_cmp(&sums[b])).then(b.cmp(&a)))
        .expect("at least two classes");
    classes[best]
}

/// Standardized training rows with their Gram matrix, shared across grid points.
pub(crate) struct PreparedSvmData {
    standardizer: Standardizer,
    x: Matrix,
    dots: Matrix,
    sq_norms: Vec<f64>,
}

impl PreparedSvmData {
    pub(crate) fn new(x: &Matrix) -> Result<Self> {
        let standardizer = Standardizer::fit(x);
        let z = standardizer.transform(x)?;
        let n = z.rows();
        let mut dots = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let d = dot(z.row(i), z.row(j));
                dots.row_mut(i)[j] = d;
                dots.row_mut(j)[i] = d;
            }
        }
        let sq_norms = (0..n).map(|i| dots.get(i, i)).collect();
        Ok(PreparedSvmData {
            standardizer,
            x: z,
            dots,
            sq_norms,
        })
    }

    /// One SMO solution per class pair; the later class of each pair is the positive side.
    fn solve_pairs(&self, y: &[usize], classes: &[usize], params: &SvmParams) -> Result<Vec<PairSolution>> {
        params.validate()?;
        let mut out = Vec::new();
        for (a, &neg) in classes.iter().enumerate() {
            for &pos in &classes[a + 1..] {
                let idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == pos || y[i] == neg).collect();
                let targets: Vec<f64> = idx.iter().map(|&i| if y[i] == pos { 1.0 } else { -1.0 }).collect();
                let m = idx.len();
                let mut k = Matrix::zeros(m, m);
                for (p, &i) in idx.iter().enumerate() {
                    for (q, &j) in idx.iter().enumerate() {
                        k.row_mut(p)[q] =
                            params.kernel_from_dot(self.dots.get(i, j), self.sq_norms[i], self.sq_norms[j]);
                    }
                }
                let sol = solve_smo(&k, &targets, params.c, params.tol, params.max_iters, false);
                out.push(PairSolution {
                    positive: pos,
                    negative: neg,
                    idx,
                    targets,
                    sol,
                });
            }
        }
        Ok(out)
    }

    fn fit(&self, y: &[usize], classes: &[usize], params: &SvmParams) -> Result<SvmModel> {
        let machines = self
            .solve_pairs(y, classes, params)?
            .into_iter()
            .map(|p| self.machine(p.positive, p.negative, &p.idx, &p.targets, p.sol, params))
            .collect();
        Ok(SvmModel {
            params: *params,
            classes: classes.to_vec(),
            standardizer: self.standardizer.clone(),
            machines,
        })
    }

    /// Correct predictions on `test_x` for every grid point, reusing one
    /// test × train dot-product matrix.
    fn score_grid(&self, y: &[usize], classes: &[usize], test_x: &Matrix, test_y: &[usize], grid: &[SvmParams]) -> Result<Vec<usize>> {
        let zt = self.standardizer.transform(test_x)?;
        let cross: Vec<Vec<f64>> = zt
            .iter_rows()
            .map(|t| self.x.iter_rows().map(|r| dot(r, t)).collect())
            .collect();
        let test_sq: Vec<f64> = zt.iter_rows().map(|t| dot(t, t)).collect();
        grid.iter()
            .map(|params| {
                let pairs = self.solve_pairs(y, classes, params)?;
                let mut dec = vec![0.0; pairs.len()];
                let mut correct = 0;
                for (t, &truth) in test_y.iter().enumerate() {
                    for (d, p) in dec.iter_mut().zip(&pairs) {
                        *d = p
                            .idx
                            .iter()
                            .zip(&p.sol.alpha)
                            .zip(&p.targets)
                            .filter(|((_, &a), _)| a > 0.0)
                            .map(|((&i, &a), &yt)| a * yt * params.kernel_from_dot(cross[t][i], self.sq_norms[i], test_sq[t]))
                            .sum::<f64>()
                            - p.sol.rho;
                    }
                    let winner = vote(classes, pairs.iter().map(|p| (p.positive, p.negative)), &dec);
                    correct += usize::from(winner == truth);
                }
                Ok(correct)
            })
            .collect()
    }

    fn machine(
        &self,
        positive: usize,
        negative: usize,
        idx: &[usize],
        targets: &[f64],
        sol: SmoSolution,
        params: &SvmParams,
    ) -> BinaryMachine {
        let mut support_vectors = Vec::new();
        let mut alphas = Vec::new();
        let mut dual_coef = Vec::new();
        for (p, &a) in sol.alpha.iter().enumerate() {
            if a > 0.0 {
                support_vectors.push(self.x.row(idx[p]).to_vec());
                alphas.push(a);
                dual_coef.push(a * targets[p]);
            }
        }
        let weights = (params.kernel == KernelKind::Linear).then(|| {
            let mut w = vec![0.0; self.x.cols()];
            for (sv, c) in support_vectors.iter().zip(&dual_coef) {
                for (wi, xi) in w.iter_mut().zip(sv) {
                    *wi += c * xi;
                }
            }
            w
        });
        BinaryMachine {
            positive,
            negative,
            support_vectors,
            alphas,
            dual_coef,
            bias: -sol.rho,
            weights,
            iterations: sol.iterations,
            converged: sol.converged,
            kkt_gap: sol.kkt_gap,
        }
    }
}

impl SvmModel {
    pub fn fit(x: &Matrix, y: &[usize], params: &SvmParams) -> Result<Self> {
        params.validate()?;
        let classes = check_training_data(x, y)?;
        PreparedSvmData::new(x)?.fit(y, &classes, params)
    }

    pub fn dim(&self) -> usize {
        self.standardizer.dim()
    }

    /// Pairwise decision values for one raw row, in machine order.
    pub fn decision_values(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: row.len(),
            });
        }
        let mut z = vec![0.0; row.len()];
        self.standardizer.transform_row(row, &mut z);
        Ok(self.machines.iter().map(|m| m.decision(&self.params, &z)).collect())
    }

    /// One-vs-one vote. A zero decision casts no vote; ties go to the larger
    /// summed signed decision value, then to the earlier class.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        (0..x.rows())
            .map(|r| {
                let dec = self.decision_values(x.row(r))?;
                Ok(vote(&self.classes, self.machines.iter().map(|m| (m.positive, m.negative)), &dec))
            })
            .collect()
    }
}

/// SVM classifier family for grid search and cross-validation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Svm;

impl Classifier for Svm {
    type Params = SvmParams;
    type Model = SvmModel;

    fn name(&self) -> &str {
        "svm"
    }

    fn fit(&self, x: &Matrix, y: &[usize], params: &SvmParams) -> Result<SvmModel> {
        SvmModel::fit(x, y, params)
    }

    fn predict(&self, model: &SvmModel, x: &Matrix) -> Result<Vec<usize>> {
        model.predict(x)
    }

    /// Smaller C, then smaller gamma, then linear before RBF, then tighter tolerance.
    fn prefer(&self, a: &SvmParams, b: &SvmParams) -> Ordering {
        a.c.total_cmp(&b.c)
            .then(a.gamma.total_cmp(&b.gamma))
            .then(a.kernel.cmp(&b.kernel))
            .then(a.tol.total_cmp(&b.tol))
            .then(a.max_iters.cmp(&b.max_iters))
    }

    fn score_grid(
        &self,
        train_x: &Matrix,
        train_y: &[usize],
        test_x: &Matrix,
        test_y: &[usize],
        grid: &[SvmParams],
    ) -> Result<Vec<usize>> {
        let classes = check_training_data(train_x, train_y)?;
        if test_x.cols() != train_x.cols() {
            return Err(Error::Dimension {
                expected: train_x.cols(),
                got: test_x.cols(),
            });
        }
        PreparedSvmData::new(train_x)?.score_grid(train_y, &classes, test_x, test_y, grid)
    }
}
