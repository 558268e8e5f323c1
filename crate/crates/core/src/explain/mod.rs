//! SHAP attributions for fitted ensembles and feature-importance summaries.

mod treeshap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use treeshap::{expected_value, tree_shap};

use crate::ensemble::Model;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputSpace {
    /// Forest positive-class probability.
    Probability,
    /// Boosted log-odds margin.
    Margin,
}

impl OutputSpace {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutputSpace::Probability => "probability",
            OutputSpace::Margin => "margin",
        }
    }
}

/// Per-row attributions; `base_value + sum(values[i])` reproduces the model
/// output of row `i` in `space`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapMatrix {
    pub values: Matrix,
    pub base_value: f64,
    pub space: OutputSpace,
}

/// Attributions of every row of `x`. Forests are explained in probability
/// space as the mean of per-tree values; boosted models in margin space as
/// the learning-rate weighted sum.
pub fn ensemble_shap(model: &Model, x: &Matrix) -> Result<ShapMatrix> {
    let d = model.n_features();
    if x.n_cols() != d {
        return Err(Error::Schema(format!("model expects {d} features, got {}", x.n_cols())));
    }
    let (trees, scale, offset, space) = match model {
        Model::Forest(m) => {
            (&m.trees, 1.0 / m.trees.len() as f64, 0.0, OutputSpace::Probability)
        }
        Model::Boosted(m) => (&m.trees, m.learning_rate, m.base_score, OutputSpace::Margin),
    };
    let mut base_value = offset;
    for t in trees {
        base_value += scale * expected_value(t)?;
    }
    let rows: Vec<Vec<f64>> = (0..x.n_rows())
        .into_par_iter()
        .map(|i| {
            let mut phi = vec![0.0; d];
            for t in trees {
                let (p, _) = tree_shap(t, x.row(i))?;
                for (acc, v) in phi.iter_mut().zip(p) {
                    *acc += scale * v;
                }
            }
            Ok(phi)
        })
        .collect::<Result<_>>()?;
    let values = if rows.is_empty() { Matrix::zeros(0, d) } else { Matrix::from_rows(&rows)? };
    Ok(ShapMatrix { values, base_value, space })
}

/// Model output whose decomposition [`ensemble_shap`] returns.
pub fn explained_output(model: &Model, x: &Matrix) -> Result<Vec<f64>> {
    match model {
        Model::Forest(_) => Ok(model.predict(x)?.1),
        Model::Boosted(m) => m.margins(x),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub mean_abs_shap: f64,
    /// 1-based.
    pub rank: usize,
}

/// Features by descending mean |attribution|; ties keep column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRanking {
    pub entries: Vec<FeatureImportance>,
}

impl ImportanceRanking {
    pub fn top(&self) -> Option<&str> {
        self.entries.first().map(|e| e.feature.as_str())
    }
}

pub fn shap_summary(s: &ShapMatrix, feature_names: &[String]) -> Result<ImportanceRanking> {
    let (n, d) = (s.values.n_rows(), s.values.n_cols());
    if feature_names.len() != d {
        return Err(Error::Schema(format!("{} names for {d} attribution columns", feature_names.len())));
    }
    let mut means: Vec<(usize, f64)> = (0..d)
        .map(|j| {
            let total: f64 = (0..n).map(|i| s.values.get(i, j).abs()).sum();
            (j, if n > 0 { total / n as f64 } else { 0.0 })
        })
        .collect();
    means.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let entries = means
        .into_iter()
        .enumerate()
        .map(|(r, (j, m))| FeatureImportance { feature: feature_names[j].clone(), mean_abs_shap: m, rank: r + 1 })
        .collect();
    Ok(ImportanceRanking { entries })
}

/// One (sample, feature) attribution with the feature's value, ready for a
/// beeswarm plot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeeswarmPoint {
    pub sample: usize,
    pub feature: String,
    pub shap_value: f64,
    pub feature_value: f64,
}

pub fn beeswarm_points(s: &ShapMatrix, x: &Matrix, feature_names: &[String]) -> Result<Vec<BeeswarmPoint>> {
    if x.n_rows() != s.values.n_rows() || x.n_cols() != s.values.n_cols() || feature_names.len() != x.n_cols() {
        return Err(Error::Schema("attributions, features and names disagree in shape".into()));
    }
    let mut out = Vec::with_capacity(x.n_rows() * x.n_cols());
    for i in 0..x.n_rows() {
        for (j, name) in feature_names.iter().enumerate() {
            out.push(BeeswarmPoint {
                sample: i,
                feature: name.clone(),
                shap_value: s.values.get(i, j),
                feature_value: x.get(i, j),
            });
        }
    }
    Ok(out)
}
