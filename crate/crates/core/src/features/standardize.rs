use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Per-column mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizerState {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

pub fn column_mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    let mean = values.clone().sum::<f64>() / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    let std = if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 };
    (mean, std)
}

pub fn fit_standardize(x: &Matrix) -> Result<StandardizerState> {
    if x.n_rows() < 2 {
        return Err(Error::Fit("standardization needs at least two rows".into()));
    }
    let (means, stds) = (0..x.n_cols())
        .map(|j| column_mean_std((0..x.n_rows()).map(move |i| x.get(i, j))))
        .unzip();
    Ok(StandardizerState { means, stds })
}

/// `(x - mean) / std`; zero-variance columns map to zero.
pub fn apply_standardize(x: &Matrix, s: &StandardizerState) -> Result<Matrix> {
    if x.n_cols() != s.means.len() {
        return Err(Error::Schema(format!(
            "standardizer fitted on {} columns, data has {}",
            s.means.len(),
            x.n_cols()
        )));
    }
    let mut out = x.clone();
    for i in 0..out.n_rows() {
        for (j, v) in out.row_mut(i).iter_mut().enumerate() {
            *v = if s.stds[j] > 0.0 { (*v - s.means[j]) / s.stds[j] } else { 0.0 };
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_column() {
        let x = Matrix::from_rows(&[vec![1.0], vec![3.0]]).unwrap();
        let s = fit_standardize(&x).unwrap();
        assert_eq!(s.means, vec![2.0]);
        assert!((s.stds[0] - 2f64.sqrt()).abs() < 1e-15);
        let z = apply_standardize(&x, &s).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((z.get(0, 0) + r).abs() < 1e-15 && (z.get(1, 0) - r).abs() < 1e-15);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let x = Matrix::from_rows(&[vec![7.0], vec![7.0], vec![7.0]]).unwrap();
        let s = fit_standardize(&x).unwrap();
        assert_eq!(apply_standardize(&x, &s).unwrap().column(0), vec![0.0; 3]);
    }

    #[test]
    fn moments_and_inverse() {
        let x = Matrix::from_rows(&[
            vec![1.0, -4.0],
            vec![2.5, 10.0],
            vec![9.0, 0.25],
            vec![-3.0, 7.5],
        ])
        .unwrap();
        let s = fit_standardize(&x).unwrap();
        let z = apply_standardize(&x, &s).unwrap();
        for j in 0..2 {
            let (m, sd) = column_mean_std(z.column(j).into_iter());
            assert!(m.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9);
            for i in 0..4 {
                assert!((z.get(i, j) * s.stds[j] + s.means[j] - x.get(i, j)).abs() < 1e-12);
            }
        }
        let wrong = Matrix::zeros(2, 3);
        assert!(matches!(apply_standardize(&wrong, &s), Err(Error::Schema(_))));
    }
}
