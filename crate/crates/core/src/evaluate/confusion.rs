use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::PhonationMode;

/// Counts with rows = true class and columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<PhonationMode>,
    pub counts: [[u64; 4]; 4],
}

impl Default for ConfusionMatrix {
    fn default() -> Self {
        ConfusionMatrix {
            classes: PhonationMode::ALL.to_vec(),
            counts: [[0; 4]; 4],
        }
    }
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, truth: PhonationMode, predicted: PhonationMode) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..4).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total().max(1) as f64
    }

    pub fn row_sums(&self) -> [u64; 4] {
        self.counts.map(|r| r.iter().sum())
    }

    /// Row percentages; empty rows stay zero.
    pub fn row_normalized(&self) -> [[f64; 4]; 4] {
        let sums = self.row_sums();
        let mut out = [[0.0; 4]; 4];
        for (i, row) in self.counts.iter().enumerate() {
            if sums[i] > 0 {
                for (j, &c) in row.iter().enumerate() {
                    out[i][j] = 100.0 * c as f64 / sums[i] as f64;
                }
            }
        }
        out
    }

    /// `true\predicted` header followed by one row per true class.
    pub fn to_csv(&self, normalized: bool) -> String {
        let mut s = String::from("true\\predicted");
        for c in &self.classes {
            s.push(',');
            s.push_str(c.as_str());
        }
        s.push('\n');
        let norm = self.row_normalized();
        for (i, c) in self.classes.iter().enumerate() {
            s.push_str(c.as_str());
            for j in 0..4 {
                if normalized {
                    let _ = write!(s, ",{:.1}", norm[i][j]);
                } else {
                    let _ = write!(s, ",{}", self.counts[i][j]);
                }
            }
            s.push('\n');
        }
        s
    }
}
