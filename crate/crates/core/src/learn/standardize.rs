use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

const STD_FLOOR: f64 = 1e-8;

/// Per-dimension z-scoring with population standard deviation floored at 1e-8.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let means = x.column_means();
        let mut var = vec![0.0; x.cols()];
        for r in x.iter_rows() {
            for ((v, xi), m) in var.iter_mut().zip(r).zip(&means) {
                *v += (xi - m) * (xi - m);
            }
        }
        let n = x.rows().max(1) as f64;
        let stds = var.iter().map(|v| (v / n).sqrt().max(STD_FLOOR)).collect();
        Standardizer { means, stds }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform_row(&self, row: &[f64], out: &mut [f64]) {
        for (((o, x), m), s) in out.iter_mut().zip(row).zip(&self.means).zip(&self.stds) {
            *o = (x - m) / s;
        }
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.cols(),
            });
        }
        let mut out = Matrix::zeros(x.rows(), x.cols());
        for r in 0..x.rows() {
            self.transform_row(x.row(r), out.row_mut(r));
        }
        Ok(out)
    }
}
