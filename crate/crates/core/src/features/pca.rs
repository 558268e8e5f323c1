use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Principal directions of the sample covariance, in descending variance order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaState {
    pub mean: Vec<f64>,
    /// k rows of length d, orthonormal.
    pub components: Vec<Vec<f64>>,
    pub explained_variance_ratio: Vec<f64>,
}

/// Eigen-decompose the (n-1)-normalized covariance. Each component's first
/// non-zero entry is made positive.
pub fn fit_pca(x: &Matrix, k: usize) -> Result<PcaState> {
    let (n, d) = (x.n_rows(), x.n_cols());
    if k == 0 || k > d {
        return Err(Error::Config(format!("PCA needs 1 <= k <= {d}, got {k}")));
    }
    if n < 2 {
        return Err(Error::Fit("PCA needs at least two rows".into()));
    }
    let mean: Vec<f64> = (0..d)
        .map(|j| (0..n).map(|i| x.get(i, j)).sum::<f64>() / n as f64)
        .collect();
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for row in x.rows() {
        for a in 0..d {
            let da = row[a] - mean[a];
            for b in a..d {
                cov[(a, b)] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / (n - 1) as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::Value("covariance has non-finite entries".into()));
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();

    let mut components = Vec::with_capacity(k);
    let mut ratios = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        if let Some(first) = v.iter().copied().find(|c| c.abs() > 1e-12) {
            if first < 0.0 {
                v.iter_mut().for_each(|c| *c = -*c);
            }
        }
        components.push(v);
        let lambda = eig.eigenvalues[idx].max(0.0);
        ratios.push(if total > 0.0 { lambda / total } else { 0.0 });
    }
    Ok(PcaState { mean, components, explained_variance_ratio: ratios })
}

pub fn apply_pca(x: &Matrix, s: &PcaState) -> Result<Matrix> {
    if x.n_cols() != s.mean.len() {
        return Err(Error::Schema(format!(
            "PCA fitted on {} columns, data has {}",
            s.mean.len(),
            x.n_cols()
        )));
    }
    let k = s.components.len();
    let mut out = Matrix::zeros(x.n_rows(), k);
    for (i, row) in x.rows().enumerate() {
        for (c, comp) in s.components.iter().enumerate() {
            let p = row.iter().zip(&s.mean).zip(comp).map(|((v, m), w)| (v - m) * w).sum();
            out.set(i, c, p);
        }
    }
    Ok(out)
}

/// Map projections back to the input space.
pub fn inverse_pca(p: &Matrix, s: &PcaState) -> Matrix {
    let d = s.mean.len();
    let mut out = Matrix::zeros(p.n_rows(), d);
    for i in 0..p.n_rows() {
        for j in 0..d {
            let v = s.mean[j]
                + (0..s.components.len()).map(|c| p.get(i, c) * s.components[c][j]).sum::<f64>();
            out.set(i, j, v);
        }
    }
    out
}
