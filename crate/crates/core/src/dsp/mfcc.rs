use crate::Matrix;

/// Orthonormal DCT-II matrix; row `k` is basis function `k`.
pub fn dct_matrix(n: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    let nf = n as f64;
    for k in 0..n {
        let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        for (i, v) in m.row_mut(k).iter_mut().enumerate() {
            *v = scale * (std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / (2.0 * nf)).cos();
        }
    }
    m
}

/// Regression deltas over `±window` frames, edges replicated:
/// `d_t = Σ_{d=1..W} d (c_{t+d} - c_{t-d}) / (2 Σ d²)`.
pub fn deltas(frames: &Matrix, window: usize) -> Matrix {
    let t_max = frames.rows() as isize - 1;
    let denom = 2.0 * (1..=window).map(|d| (d * d) as f64).sum::<f64>();
    let mut out = Matrix::zeros(frames.rows(), frames.cols());
    for t in 0..frames.rows() {
        let dst = out.row_mut(t);
        for d in 1..=window as isize {
            let ahead = frames.row((t as isize + d).min(t_max) as usize);
            let behind = frames.row((t as isize - d).max(0) as usize);
            for ((o, a), b) in dst.iter_mut().zip(ahead).zip(behind) {
                *o += d as f64 * (a - b);
            }
        }
        dst.iter_mut().for_each(|v| *v /= denom);
    }
    out
}
