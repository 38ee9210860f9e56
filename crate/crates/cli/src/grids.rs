//! Hyperparameter grids, optionally overridden from a TOML file:
//!
//! ```toml
//! [svm]
//! c = [0.1, 1.0, 10.0]
//! gamma = ["1/dim", 0.01]
//!
//! [xgb]
//! n_rounds = [100]
//! max_depth = [3, 6]
//! ```
//!
//! Missing keys keep their defaults.

use std::path::Path;

use anyhow::Context;
use phonation::learn::{GbdtParams, KernelKind, SvmParams};
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    Value(f64),
    /// Only `"1/dim"` is accepted.
    Rule(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmGrid {
    pub c: Vec<f64>,
    pub gamma: Vec<Gamma>,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SvmGrid {
    fn default() -> Self {
        SvmGrid {
            c: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            gamma: vec![
                Gamma::Rule("1/dim".into()),
                Gamma::Value(1e-3),
                Gamma::Value(1e-2),
                Gamma::Value(1e-1),
            ],
            tol: 1e-3,
            max_iters: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XgbGrid {
    pub n_rounds: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub max_depth: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
    pub l2_leaf_reg: Vec<f64>,
    pub subsample: Vec<f64>,
}

impl Default for XgbGrid {
    fn default() -> Self {
        XgbGrid {
            n_rounds: vec![100, 300],
            learning_rate: vec![0.1, 0.3],
            max_depth: vec![3, 6],
            min_samples_leaf: vec![1],
            l2_leaf_reg: vec![1.0],
            subsample: vec![1.0],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub svm: SvmGrid,
    pub xgb: XgbGrid,
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<(), UsageError> {
    if v.is_empty() {
        return Err(UsageError(format!("grid `{name}` must not be empty")));
    }
    Ok(())
}

impl GridConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: GridConfig =
            toml::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
        cfg.svm_grid(KernelKind::Rbf, 1)?;
        cfg.xgb_grid(0)?;
        Ok(cfg)
    }

    /// SVM grid for features of dimension `dim`. Linear kernels ignore gamma.
    pub fn svm_grid(&self, kernel: KernelKind, dim: usize) -> Result<Vec<SvmParams>, UsageError> {
        let g = &self.svm;
        nonempty("svm.c", &g.c)?;
        nonempty("svm.gamma", &g.gamma)?;
        let gammas = match kernel {
            KernelKind::Linear => vec![SvmParams::default().gamma],
            KernelKind::Rbf => g
                .gamma
                .iter()
                .map(|v| match v {
                    Gamma::Value(x) => Ok(*x),
                    Gamma::Rule(r) if r == "1/dim" => Ok(1.0 / dim.max(1) as f64),
                    Gamma::Rule(r) => Err(UsageError(format!("unknown gamma rule `{r}` (use a number or \"1/dim\")"))),
                })
                .collect::<Result<_, _>>()?,
        };
        let mut out = Vec::new();
        for &c in &g.c {
            for &gamma in &gammas {
                let p = SvmParams {
                    kernel,
                    c,
                    gamma,
                    tol: g.tol,
                    max_iters: g.max_iters,
                };
                p.validate().map_err(|e| UsageError(e.to_string()))?;
                if !out.contains(&p) {
                    out.push(p);
                }
            }
        }
        Ok(out)
    }

    pub fn xgb_grid(&self, seed: u64) -> Result<Vec<GbdtParams>, UsageError> {
        let g = &self.xgb;
        nonempty("xgb.n_rounds", &g.n_rounds)?;
        nonempty("xgb.learning_rate", &g.learning_rate)?;
        nonempty("xgb.max_depth", &g.max_depth)?;
        nonempty("xgb.min_samples_leaf", &g.min_samples_leaf)?;
        nonempty("xgb.l2_leaf_reg", &g.l2_leaf_reg)?;
        nonempty("xgb.subsample", &g.subsample)?;
        let mut out = Vec::new();
        for &n_rounds in &g.n_rounds {
            for &learning_rate in &g.learning_rate {
                for &max_depth in &g.max_depth {
                    for &min_samples_leaf in &g.min_samples_leaf {
                        for &l2_leaf_reg in &g.l2_leaf_reg {
                            for &subsample in &g.subsample {
                                let p = GbdtParams {
                                    n_rounds,
                                    learning_rate,
                                    max_depth,
                                    min_samples_leaf,
                                    l2_leaf_reg,
                                    subsample,
                                    seed,
                                };
                                p.validate().map_err(|e| UsageError(e.to_string()))?;
                                out.push(p);
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}
