//! Stratified k-fold cross-validation.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, Metric, MetricsRow};
use super::stability::{describe, Stability};
use crate::dataio::Dataset;
use crate::ensemble::{ModelKind, ModelSpec};
use crate::error::{Error, Result};
use crate::features::{Preprocess, PreprocessConfig};
use crate::rng::{derive_seed, rng_for};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }
}

/// Shuffle each class with its own seeded stream and deal its members to
/// folds round-robin, continuing where the previous class stopped so fold
/// sizes stay within one of each other.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Config(format!("k must be at least 2, got {k}")));
    }
    if k > labels.len() {
        return Err(Error::Config(format!("k = {k} exceeds the {} rows", labels.len())));
    }
    let mut fold_of = vec![0usize; labels.len()];
    let mut offset = 0;
    for class in 0..2u8 {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.is_empty() {
            continue;
        }
        if idx.len() < k {
            return Err(Error::Config(format!(
                "class {class} has {} members, fewer than k = {k}",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng_for(seed, &[class as u64]));
        for (pos, &i) in idx.iter().enumerate() {
            fold_of[i] = (offset + pos) % k;
        }
        offset = (offset + idx.len()) % k;
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::Value(format!("label {bad} is not binary")));
    }
    Ok(FoldAssignment { k, fold_of })
}

/// Train and test metrics of one model on one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub model: ModelKind,
    /// 1-based.
    pub fold: usize,
    pub train: Option<MetricsRow>,
    pub test: Option<MetricsRow>,
    /// Set when the fold failed to fit or predict.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub models: Vec<ModelKind>,
    /// Grouped by model in `models` order, folds ascending.
    pub rows: Vec<FoldResult>,
}

pub const CSV_HEADER: [&str; 10] = [
    "Model",
    "Fold",
    "Accuracy",
    "Balanced Accuracy",
    "Precision",
    "Recall",
    "F1",
    "ROC_AUC",
    "RMSE",
    "MAE",
];

fn fit_fold(
    spec: &ModelSpec,
    ds: &Dataset,
    train: &[usize],
    test: &[usize],
    pre_cfg: &PreprocessConfig,
    seed: u64,
) -> Result<(MetricsRow, MetricsRow)> {
    let tr = ds.subset(train);
    let te = ds.subset(test);
    let pre = Preprocess::fit(&tr.features, &tr.feature_names, pre_cfg)?;
    let xtr = pre.transform(&tr.features)?;
    let xte = pre.transform(&te.features)?;
    let model = spec.with_seed(seed).fit(&xtr, &tr.labels)?;
    let (ltr, ptr) = model.predict(&xtr)?;
    let (lte, pte) = model.predict(&xte)?;
    Ok((evaluate(&tr.labels, &ltr, &ptr)?, evaluate(&te.labels, &lte, &pte)?))
}

/// Training seed of one (model, fold) cell.
pub fn fold_seed(seed: u64, model: ModelKind, fold: usize) -> u64 {
    derive_seed(seed, &[model.index() as u64, fold as u64])
}

/// Evaluate every spec on every fold. Preprocessing is fit on each training
/// split alone. A failing fold is recorded and the run continues.
pub fn cross_validate(
    specs: &[ModelSpec],
    ds: &Dataset,
    k: usize,
    seed: u64,
    pre_cfg: &PreprocessConfig,
) -> Result<CvReport> {
    ds.validate()?;
    for s in specs {
        s.validate()?;
    }
    let folds = stratified_kfold(&ds.labels, k, seed)?;
    let splits: Vec<(Vec<usize>, Vec<usize>)> =
        (0..k).map(|f| (folds.train_indices(f), folds.test_indices(f))).collect();
    let cells: Vec<(usize, usize)> = (0..specs.len()).flat_map(|m| (0..k).map(move |f| (m, f))).collect();
    let rows = cells
        .par_iter()
        .map(|&(m, f)| {
            let spec = &specs[m];
            let kind = spec.kind();
            let (train, test) = &splits[f];
            match fit_fold(spec, ds, train, test, pre_cfg, fold_seed(seed, kind, f)) {
                Ok((tr, te)) => FoldResult { model: kind, fold: f + 1, train: Some(tr), test: Some(te), error: None },
                Err(e) => {
                    log::warn!("{} fold {} failed: {e}", kind.display_name(), f + 1);
                    FoldResult { model: kind, fold: f + 1, train: None, test: None, error: Some(e.to_string()) }
                }
            }
        })
        .collect();
    Ok(CvReport { k, seed, models: specs.iter().map(ModelSpec::kind).collect(), rows })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

impl CvReport {
    /// Per-fold test metrics, one row per (model, fold).
    pub fn to_csv(&self) -> String {
        let mut out = CSV_HEADER.join(",");
        out.push('\n');
        for r in &self.rows {
            let mut cells = vec![r.model.display_name().to_owned(), r.fold.to_string()];
            for m in Metric::ALL {
                cells.push(fmt_opt(r.test.as_ref().and_then(|row| m.of(row))));
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn rows_for(&self, model: ModelKind) -> impl Iterator<Item = &FoldResult> {
        self.rows.iter().filter(move |r| r.model == model)
    }

    /// Train/test mean, sample std and CV% per metric and model.
    pub fn aggregate(&self) -> Vec<ModelAggregate> {
        self.models
            .iter()
            .map(|&model| {
                let rows: Vec<&FoldResult> = self.rows_for(model).collect();
                let stat = |split: fn(&FoldResult) -> Option<&MetricsRow>, m: Metric| {
                    let vals: Vec<f64> = rows.iter().filter_map(|r| split(r).and_then(|row| m.of(row))).collect();
                    describe(&vals).ok()
                };
                let metrics = Metric::ALL
                    .into_iter()
                    .map(|m| MetricAggregate {
                        metric: m.column().to_owned(),
                        train: stat(|r| r.train.as_ref(), m),
                        test: stat(|r| r.test.as_ref(), m),
                    })
                    .collect();
                let acc: Vec<f64> = rows.iter().filter_map(|r| r.test.map(|t| t.accuracy)).collect();
                let err_rate = acc.iter().map(|a| 1.0 - a).sum::<f64>() / acc.len().max(1) as f64;
                ModelAggregate {
                    model: model.display_name().to_owned(),
                    folds_ok: rows.iter().filter(|r| r.error.is_none()).count(),
                    folds_failed: rows.iter().filter(|r| r.error.is_some()).count(),
                    metrics,
                    hard_label_rmse: (!acc.is_empty()).then(|| err_rate.sqrt()),
                    hard_label_mae: (!acc.is_empty()).then_some(err_rate),
                }
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = CvSummary { k: self.k, seed: self.seed, models: self.aggregate(), folds: self.rows.clone() };
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub metric: String,
    pub train: Option<Stability>,
    pub test: Option<Stability>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAggregate {
    pub model: String,
    pub folds_ok: usize,
    pub folds_failed: usize,
    pub metrics: Vec<MetricAggregate>,
    /// Fold-mean test error computed from hard labels instead of probabilities.
    pub hard_label_rmse: Option<f64>,
    pub hard_label_mae: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CvSummary {
    k: usize,
    seed: u64,
    models: Vec<ModelAggregate>,
    folds: Vec<FoldResult>,
}
