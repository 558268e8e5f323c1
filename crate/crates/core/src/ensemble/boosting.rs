//! Gradient boosting on the logistic loss: classic first-order GBM with
//! per-leaf Newton steps, a regularized second-order variant with exact
//! split search, and a histogram variant with gradient-based one-sided
//! sampling.

use rand::seq::{index::sample, SliceRandom};
use serde::{Deserialize, Serialize};

use super::forest::class_counts;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, rng_for};
use crate::tree::{
    build_histograms, fit_regression_tree, node_features, FeatureValues, GradHess, NodeValue,
    RegressionParams, SplitSearch, Tree,
};

/// Minimum validation deviance improvement that resets early stopping.
pub const EARLY_STOP_TOL: f64 = 1e-7;

// stream tags under each round's seed
const TAG_ROWS: u64 = 0;
const TAG_TREE: u64 = 1;
const TAG_COLUMNS: u64 = 2;
const TAG_GOSS: u64 = 3;
const HOLDOUT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoostVariant {
    Gbm,
    Xgb,
    Lgbm,
}

impl BoostVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoostVariant::Gbm => "gbm",
            BoostVariant::Xgb => "xgb",
            BoostVariant::Lgbm => "lgbm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub variant: BoostVariant,
    pub n_estimators: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub subsample: f64,
    pub colsample_bytree: f64,
    pub reg_alpha: f64,
    pub reg_lambda: f64,
    pub gamma: f64,
    pub min_child_samples: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: f64,
    pub validation_fraction: f64,
    /// Early stopping patience; `None` disables early stopping.
    pub n_iter_no_change: Option<usize>,
    pub top_rate: f64,
    pub other_rate: f64,
    pub max_bins: usize,
    pub seed: u64,
}

impl BoostParams {
    fn base(variant: BoostVariant) -> Self {
        Self {
            variant,
            n_estimators: 100,
            max_depth: 3,
            learning_rate: 0.1,
            subsample: 1.0,
            colsample_bytree: 1.0,
            reg_alpha: 0.0,
            reg_lambda: 0.0,
            gamma: 0.0,
            min_child_samples: 1,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: 1.0,
            validation_fraction: 0.1,
            n_iter_no_change: None,
            top_rate: 0.2,
            other_rate: 0.1,
            max_bins: 255,
            seed: 42,
        }
    }

    /// Tuned classic gradient boosting configuration.
    pub fn gbm() -> Self {
        Self {
            n_estimators: 3,
            max_depth: 2,
            learning_rate: 0.4,
            subsample: 0.5,
            min_samples_split: 9,
            min_samples_leaf: 10,
            max_features: 0.3,
            validation_fraction: 0.1,
            n_iter_no_change: Some(2),
            ..Self::base(BoostVariant::Gbm)
        }
    }

    /// Tuned second-order boosting configuration.
    pub fn xgb() -> Self {
        Self {
            n_estimators: 10,
            max_depth: 2,
            learning_rate: 0.5,
            subsample: 0.4,
            colsample_bytree: 0.2,
            gamma: 3.0,
            reg_alpha: 2.0,
            reg_lambda: 2.0,
            ..Self::base(BoostVariant::Xgb)
        }
    }

    /// Tuned histogram boosting configuration.
    pub fn lgbm() -> Self {
        Self {
            n_estimators: 5,
            max_depth: 1,
            learning_rate: 0.8,
            subsample: 0.3,
            colsample_bytree: 0.1,
            min_child_samples: 50,
            reg_alpha: 3.0,
            reg_lambda: 3.0,
            ..Self::base(BoostVariant::Lgbm)
        }
    }

    pub fn for_variant(variant: BoostVariant) -> Self {
        match variant {
            BoostVariant::Gbm => Self::gbm(),
            BoostVariant::Xgb => Self::xgb(),
            BoostVariant::Lgbm => Self::lgbm(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let frac = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} {v} outside (0, 1]")))
            }
        };
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!("learning_rate {} is negative", self.learning_rate)));
        }
        frac("subsample", self.subsample)?;
        frac("colsample_bytree", self.colsample_bytree)?;
        frac("max_features", self.max_features)?;
        for (name, v) in [("reg_alpha", self.reg_alpha), ("reg_lambda", self.reg_lambda), ("gamma", self.gamma)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if self.min_samples_leaf < 1 || self.min_child_samples < 1 || self.min_samples_split < 2 {
            return Err(Error::Config(
                "min_samples_leaf and min_child_samples >= 1, min_samples_split >= 2 required".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config(format!(
                "validation_fraction {} outside [0, 1)",
                self.validation_fraction
            )));
        }
        if self.n_iter_no_change == Some(0) {
            return Err(Error::Config("n_iter_no_change must be at least 1".into()));
        }
        if !(2..=255).contains(&self.max_bins) {
            return Err(Error::Config(format!("max_bins {} outside [2, 255]", self.max_bins)));
        }
        if self.variant == BoostVariant::Lgbm {
            check_goss_rates(self.top_rate, self.other_rate)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostedModel {
    pub variant: BoostVariant,
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    /// Number of rounds kept; fewer than requested after early stopping.
    pub stopped_at: usize,
    pub params: BoostParams,
    pub n_features: usize,
}

pub fn sigmoid(f: f64) -> f64 {
    1.0 / (1.0 + (-f).exp())
}

fn log_odds(y: &[u8], rows: &[usize]) -> f64 {
    let pos = rows.iter().filter(|&&i| y[i] == 1).count() as f64;
    let p = pos / rows.len() as f64;
    (p / (1.0 - p)).ln()
}

/// Mean binomial deviance (negative log-likelihood) of margins `f` on `rows`.
pub fn binomial_deviance(f: &[f64], y: &[u8], rows: &[usize]) -> f64 {
    let total: f64 = rows
        .iter()
        .map(|&i| {
            // log(1 + e^f) - y f, computed stably
            let fi = f[i];
            let softplus = if fi > 0.0 { fi + (-fi).exp().ln_1p() } else { fi.exp().ln_1p() };
            softplus - y[i] as f64 * fi
        })
        .sum();
    total / rows.len() as f64
}

/// Sorted column subset for one tree.
pub fn choose_columns(d: usize, fraction: f64, seed: u64) -> Vec<usize> {
    let all: Vec<usize> = (0..d).collect();
    node_features(&all, fraction, seed, 0)
}

/// `max(1, floor(fraction * rows.len()))` rows without replacement, ascending.
fn subsample_rows(rows: &[usize], fraction: f64, seed: u64) -> Vec<usize> {
    if fraction >= 1.0 {
        return rows.to_vec();
    }
    let k = ((fraction * rows.len() as f64).floor() as usize).clamp(1, rows.len());
    let mut rng = rng_for(seed, &[]);
    let mut picked: Vec<usize> = sample(&mut rng, rows.len(), k).into_iter().map(|i| rows[i]).collect();
    picked.sort_unstable();
    picked
}

fn check_inputs(x: &Matrix, y: &[u8], p: &BoostParams, variant: BoostVariant) -> Result<()> {
    if p.variant != variant {
        return Err(Error::Config(format!(
            "parameters are for {}, not {}",
            p.variant.as_str(),
            variant.as_str()
        )));
    }
    p.validate()?;
    if x.n_rows() == 0 || x.n_cols() == 0 {
        return Err(Error::Fit("cannot boost on empty data".into()));
    }
    if y.len() != x.n_rows() {
        return Err(Error::Schema(format!("{} rows but {} labels", x.n_rows(), y.len())));
    }
    if x.as_slice().iter().any(|v| v.is_nan()) {
        return Err(Error::Value("feature matrix contains NaN".into()));
    }
    let c = class_counts(y)?;
    if c[0] == 0 || c[1] == 0 {
        return Err(Error::Fit("training labels contain a single class".into()));
    }
    Ok(())
}

fn logistic_grad_hess(f: &[f64], y: &[u8]) -> Result<GradHess> {
    let p: Vec<f64> = f.iter().map(|&v| sigmoid(v)).collect();
    let g = p.iter().zip(y).map(|(pi, &yi)| pi - yi as f64).collect();
    let h = p.iter().map(|pi| pi * (1.0 - pi)).collect();
    GradHess::new(g, h)
}

fn add_tree(f: &mut [f64], tree: &Tree, x: &Matrix, lr: f64) -> Result<()> {
    for (i, fi) in f.iter_mut().enumerate() {
        *fi += lr * tree.predict_scalar(x.row(i))?;
    }
    Ok(())
}

/// Stratified hold-out split: `(train, validation)`, both ascending.
fn holdout_split(y: &[u8], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = rng_for(seed, &[HOLDOUT_STREAM]);
    let mut val = Vec::new();
    for class in 0..2u8 {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut rng);
        // keep at least one training row per class
        let k = ((fraction * idx.len() as f64).ceil() as usize).min(idx.len().saturating_sub(1));
        val.extend_from_slice(&idx[..k]);
    }
    val.sort_unstable();
    let mut in_val = vec![false; y.len()];
    for &i in &val {
        in_val[i] = true;
    }
    ((0..y.len()).filter(|&i| !in_val[i]).collect(), val)
}

/// Classic gradient boosting: trees fit the residuals `y - p` with unit
/// hessians, then each node's value is replaced by the Newton step
/// `sum(y - p) / sum(p (1 - p))` over the rows it saw.
pub fn fit_gbm(x: &Matrix, y: &[u8], p: &BoostParams) -> Result<BoostedModel> {
    check_inputs(x, y, p, BoostVariant::Gbm)?;
    let n = x.n_rows();
    let early = p.n_iter_no_change.filter(|_| p.validation_fraction > 0.0);
    let (train, val) = match early {
        Some(_) => holdout_split(y, p.validation_fraction, p.seed),
        None => ((0..n).collect(), Vec::new()),
    };
    if class_counts(&train.iter().map(|&i| y[i]).collect::<Vec<_>>())?.contains(&0) {
        return Err(Error::Fit("training split lost a class".into()));
    }
    let base_score = log_odds(y, &train);
    let values = FeatureValues::new(x)?;
    let features: Vec<usize> = (0..x.n_cols()).collect();
    let mut f = vec![base_score; n];
    let mut trees = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut stale = 0usize;
    for round in 0..p.n_estimators {
        let round_seed = derive_seed(p.seed, &[round as u64]);
        let prob: Vec<f64> = f.iter().map(|&v| sigmoid(v)).collect();
        let residual: Vec<f64> = prob.iter().zip(y).map(|(pi, &yi)| yi as f64 - pi).collect();
        let gh = GradHess::new(residual.iter().map(|r| -r).collect(), vec![1.0; n])?;
        let rows = subsample_rows(&train, p.subsample, derive_seed(round_seed, &[TAG_ROWS]));
        let rp = RegressionParams {
            max_depth: p.max_depth,
            min_samples_split: p.min_samples_split,
            min_samples_leaf: p.min_samples_leaf,
            max_features: p.max_features,
            lambda: 0.0,
            alpha_l1: 0.0,
            gamma: 0.0,
            seed: derive_seed(round_seed, &[TAG_TREE]),
        };
        let mut tree =
            fit_regression_tree(SplitSearch::Exact(&values), &gh, &rows, None, &features, &rp)?;
        newton_step(&mut tree, x, &rows, &residual, &prob)?;
        add_tree(&mut f, &tree, x, p.learning_rate)?;
        trees.push(tree);
        if let Some(patience) = early {
            let dev = binomial_deviance(&f, y, &val);
            if dev < best_val - EARLY_STOP_TOL {
                best_val = dev;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    log::debug!("early stopping after {} rounds", trees.len());
                    break;
                }
            }
        }
    }
    Ok(BoostedModel {
        variant: BoostVariant::Gbm,
        base_score,
        learning_rate: p.learning_rate,
        stopped_at: trees.len(),
        trees,
        params: p.clone(),
        n_features: x.n_cols(),
    })
}

fn newton_step(tree: &mut Tree, x: &Matrix, rows: &[usize], residual: &[f64], prob: &[f64]) -> Result<()> {
    let mut num = vec![0.0; tree.n_nodes()];
    let mut den = vec![0.0; tree.n_nodes()];
    for &i in rows {
        let row = x.row(i);
        let mut id = 0;
        loop {
            num[id] += residual[i];
            den[id] += prob[i] * (1.0 - prob[i]);
            match tree.nodes()[id].split {
                Some(s) => id = if row[s.feature] <= s.threshold { s.left } else { s.right },
                None => break,
            }
        }
    }
    for id in 0..tree.n_nodes() {
        let v = if den[id].abs() < 1e-150 { 0.0 } else { num[id] / den[id] };
        tree.set_value(id, NodeValue::Scalar(v));
    }
    Ok(())
}

/// Regularized second-order boosting with exact split search.
pub fn fit_xgb(x: &Matrix, y: &[u8], p: &BoostParams) -> Result<BoostedModel> {
    check_inputs(x, y, p, BoostVariant::Xgb)?;
    let n = x.n_rows();
    let all: Vec<usize> = (0..n).collect();
    let base_score = log_odds(y, &all);
    let values = FeatureValues::new(x)?;
    let mut f = vec![base_score; n];
    let mut trees = Vec::with_capacity(p.n_estimators);
    for round in 0..p.n_estimators {
        let round_seed = derive_seed(p.seed, &[round as u64]);
        let gh = logistic_grad_hess(&f, y)?;
        let rows = subsample_rows(&all, p.subsample, derive_seed(round_seed, &[TAG_ROWS]));
        let cols = choose_columns(x.n_cols(), p.colsample_bytree, derive_seed(round_seed, &[TAG_COLUMNS]));
        let rp = second_order_params(p, p.min_samples_leaf, round_seed);
        let tree = fit_regression_tree(SplitSearch::Exact(&values), &gh, &rows, None, &cols, &rp)?;
        add_tree(&mut f, &tree, x, p.learning_rate)?;
        trees.push(tree);
    }
    Ok(BoostedModel {
        variant: BoostVariant::Xgb,
        base_score,
        learning_rate: p.learning_rate,
        stopped_at: trees.len(),
        trees,
        params: p.clone(),
        n_features: x.n_cols(),
    })
}

fn second_order_params(p: &BoostParams, min_leaf: usize, round_seed: u64) -> RegressionParams {
    RegressionParams {
        max_depth: p.max_depth,
        min_samples_split: 2,
        min_samples_leaf: min_leaf,
        max_features: 1.0,
        lambda: p.reg_lambda,
        alpha_l1: p.reg_alpha,
        gamma: p.gamma,
        seed: derive_seed(round_seed, &[TAG_TREE]),
    }
}

/// Rows kept by one-sided sampling, ascending, with their multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct GossSample {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

fn check_goss_rates(a: f64, b: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a + b > 1.0 + 1e-12 {
        return Err(Error::Config(format!("GOSS rates a={a}, b={b} need a, b >= 0 and a + b <= 1")));
    }
    if b == 0.0 && a < 1.0 {
        return Err(Error::Config("other_rate 0 with top_rate < 1 leaves the amplification undefined".into()));
    }
    Ok(())
}

/// Keep the `ceil(a n)` rows with the largest |gradient| at weight 1 and a
/// uniform `ceil(b n)` of the rest at weight `(1 - a) / b`.
pub fn goss_sample(gradients: &[f64], a: f64, b: f64, seed: u64) -> Result<GossSample> {
    check_goss_rates(a, b)?;
    let n = gradients.len();
    if a + b >= 1.0 - 1e-12 {
        return Ok(GossSample { indices: (0..n).collect(), weights: vec![1.0; n] });
    }
    let n_top = (((a * n as f64) - 1e-9).ceil().max(0.0) as usize).min(n);
    let mut by_grad: Vec<usize> = (0..n).collect();
    by_grad.sort_by(|&i, &j| gradients[j].abs().total_cmp(&gradients[i].abs()).then(i.cmp(&j)));
    let mut rest: Vec<usize> = by_grad[n_top..].to_vec();
    rest.sort_unstable();
    let n_other = (((b * n as f64) - 1e-9).ceil().max(0.0) as usize).min(rest.len());
    let mut rng = rng_for(seed, &[]);
    let amplify = (1.0 - a) / b;
    let mut picked: Vec<(usize, f64)> = by_grad[..n_top].iter().map(|&i| (i, 1.0)).collect();
    picked.extend(sample(&mut rng, rest.len(), n_other).into_iter().map(|k| (rest[k], amplify)));
    picked.sort_unstable_by_key(|&(i, _)| i);
    Ok(GossSample {
        indices: picked.iter().map(|&(i, _)| i).collect(),
        weights: picked.iter().map(|&(_, w)| w).collect(),
    })
}

/// Histogram boosting with one-sided sampling. `subsample` is not used:
/// row selection is entirely up to the sampler.
pub fn fit_lgbm(x: &Matrix, y: &[u8], p: &BoostParams) -> Result<BoostedModel> {
    check_inputs(x, y, p, BoostVariant::Lgbm)?;
    let n = x.n_rows();
    let all: Vec<usize> = (0..n).collect();
    let base_score = log_odds(y, &all);
    let bins = build_histograms(x, p.max_bins)?;
    let mut f = vec![base_score; n];
    let mut trees = Vec::with_capacity(p.n_estimators);
    let mut w = vec![0.0; n];
    for round in 0..p.n_estimators {
        let round_seed = derive_seed(p.seed, &[round as u64]);
        let gh = logistic_grad_hess(&f, y)?;
        let goss = goss_sample(&gh.g, p.top_rate, p.other_rate, derive_seed(round_seed, &[TAG_GOSS]))?;
        w.fill(0.0);
        for (&i, &wi) in goss.indices.iter().zip(&goss.weights) {
            w[i] = wi;
        }
        let cols = choose_columns(x.n_cols(), p.colsample_bytree, derive_seed(round_seed, &[TAG_COLUMNS]));
        let rp = second_order_params(p, p.min_child_samples, round_seed);
        let tree =
            fit_regression_tree(SplitSearch::Histogram(&bins), &gh, &goss.indices, Some(&w), &cols, &rp)?;
        add_tree(&mut f, &tree, x, p.learning_rate)?;
        trees.push(tree);
    }
    Ok(BoostedModel {
        variant: BoostVariant::Lgbm,
        base_score,
        learning_rate: p.learning_rate,
        stopped_at: trees.len(),
        trees,
        params: p.clone(),
        n_features: x.n_cols(),
    })
}

/// Dispatch on `p.variant`.
pub fn fit_boosted(x: &Matrix, y: &[u8], p: &BoostParams) -> Result<BoostedModel> {
    match p.variant {
        BoostVariant::Gbm => fit_gbm(x, y, p),
        BoostVariant::Xgb => fit_xgb(x, y, p),
        BoostVariant::Lgbm => fit_lgbm(x, y, p),
    }
}

impl BoostedModel {
    /// `base + lr * tree_1(x) + ... + lr * tree_m(x)`, accumulated in order.
    pub fn margin(&self, row: &[f64]) -> Result<f64> {
        let mut f = self.base_score;
        for t in &self.trees {
            f += self.learning_rate * t.predict_scalar(row)?;
        }
        Ok(f)
    }

    pub fn margins(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.n_features {
            return Err(Error::Schema(format!(
                "model expects {} features, got {}",
                self.n_features,
                x.n_cols()
            )));
        }
        (0..x.n_rows()).map(|i| self.margin(x.row(i))).collect()
    }
}

/// Labels (`p > 0.5`) and probabilities `sigmoid(margin)`.
pub fn predict_boosted(m: &BoostedModel, x: &Matrix) -> Result<(Vec<u8>, Vec<f64>)> {
    let probs: Vec<f64> = m.margins(x)?.into_iter().map(sigmoid).collect();
    Ok((probs.iter().map(|&p| u8::from(p > 0.5)).collect(), probs))
}
