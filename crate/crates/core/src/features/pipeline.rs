//! Train-fitted preprocessing chain applied before every model: median
//! imputation, correlation pruning, standardization and optional PCA.

use serde::{Deserialize, Serialize};

use super::{apply_pca, apply_standardize, correlation_prune, fit_pca, fit_standardize, PcaState, StandardizerState};
use crate::dataio::median;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const DEFAULT_CORRELATION_THRESHOLD: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Drop later columns whose |r| with a kept column reaches this value.
    pub correlation_threshold: Option<f64>,
    pub standardize: bool,
    pub pca_components: Option<usize>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            correlation_threshold: Some(DEFAULT_CORRELATION_THRESHOLD),
            standardize: true,
            pca_components: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocess {
    pub input_features: Vec<String>,
    /// Per input column; fills NaN entries.
    pub medians: Vec<f64>,
    /// Input columns surviving correlation pruning.
    pub kept: Vec<usize>,
    pub standardizer: Option<StandardizerState>,
    pub pca: Option<PcaState>,
    pub output_features: Vec<String>,
}

impl Preprocess {
    /// Fit every stage on `x` (NaN marks missing).
    pub fn fit(x: &Matrix, names: &[String], cfg: &PreprocessConfig) -> Result<Self> {
        if names.len() != x.n_cols() {
            return Err(Error::Schema(format!("{} names for {} columns", names.len(), x.n_cols())));
        }
        if x.n_rows() < 2 {
            return Err(Error::Fit("preprocessing needs at least two training rows".into()));
        }
        let medians = (0..x.n_cols())
            .map(|j| {
                let present: Vec<f64> = x.column(j).into_iter().filter(|v| !v.is_nan()).collect();
                median(&present)
                    .ok_or_else(|| Error::Fit(format!("feature '{}' has no observed values", names[j])))
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut state = Self {
            input_features: names.to_vec(),
            medians,
            kept: (0..x.n_cols()).collect(),
            standardizer: None,
            pca: None,
            output_features: Vec::new(),
        };
        let filled = state.impute(x)?;
        if let Some(t) = cfg.correlation_threshold {
            state.kept = correlation_prune(&filled, t)?;
        }
        let mut z = filled.select_cols(&state.kept);
        if cfg.standardize {
            let s = fit_standardize(&z)?;
            z = apply_standardize(&z, &s)?;
            state.standardizer = Some(s);
        }
        state.output_features = state.kept.iter().map(|&j| names[j].clone()).collect();
        if let Some(k) = cfg.pca_components {
            state.pca = Some(fit_pca(&z, k)?);
            state.output_features = (1..=k).map(|i| format!("pc{i}")).collect();
        }
        Ok(state)
    }

    fn impute(&self, x: &Matrix) -> Result<Matrix> {
        if x.n_cols() != self.medians.len() {
            return Err(Error::Schema(format!(
                "preprocessing fitted on {} features, data has {}",
                self.medians.len(),
                x.n_cols()
            )));
        }
        let mut out = x.clone();
        for i in 0..out.n_rows() {
            for (v, &m) in out.row_mut(i).iter_mut().zip(&self.medians) {
                if v.is_nan() {
                    *v = m;
                }
            }
        }
        Ok(out)
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        let mut z = self.impute(x)?.select_cols(&self.kept);
        if let Some(s) = &self.standardizer {
            z = apply_standardize(&z, s)?;
        }
        if let Some(p) = &self.pca {
            z = apply_pca(&z, p)?;
        }
        Ok(z)
    }

    /// Input column feeding each output column, when outputs are not
    /// principal components.
    pub fn output_sources(&self) -> Option<&[usize]> {
        self.pca.is_none().then_some(self.kept.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("f{j}")).collect()
    }

    #[test]
    fn imputes_with_training_medians() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![f64::NAN, 1.0], vec![3.0, 0.0], vec![5.0, 1.0]]).unwrap();
        let cfg = PreprocessConfig { correlation_threshold: None, standardize: false, pca_components: None };
        let p = Preprocess::fit(&x, &names(2), &cfg).unwrap();
        assert_eq!(p.medians, vec![3.0, 0.5]);
        assert_eq!(p.transform(&x).unwrap().get(1, 0), 3.0);
    }

    #[test]
    fn prunes_duplicate_columns() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 0.0], vec![2.0, 4.0, 1.0], vec![3.0, 6.0, 0.0]]).unwrap();
        let p = Preprocess::fit(&x, &names(3), &PreprocessConfig::default()).unwrap();
        assert_eq!(p.kept, vec![0, 2]);
        assert_eq!(p.output_features, vec!["f0", "f2"]);
        assert_eq!(p.transform(&x).unwrap().n_cols(), 2);
    }

    #[test]
    fn pca_renames_outputs() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 1.0], vec![2.0, 2.0]]).unwrap();
        let cfg = PreprocessConfig { pca_components: Some(1), ..Default::default() };
        let p = Preprocess::fit(&x, &names(2), &cfg).unwrap();
        assert_eq!(p.output_features, vec!["pc1"]);
        assert!(p.output_sources().is_none());
    }

    #[test]
    fn all_missing_column_is_fit_error() {
        let x = Matrix::from_rows(&[vec![f64::NAN], vec![f64::NAN]]).unwrap();
        assert!(matches!(Preprocess::fit(&x, &names(1), &PreprocessConfig::default()), Err(Error::Fit(_))));
    }
}
