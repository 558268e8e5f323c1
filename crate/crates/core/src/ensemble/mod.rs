//! The four ensemble learners and a common prediction interface.

mod boosting;
mod forest;

pub use boosting::{
    binomial_deviance, choose_columns, fit_boosted, fit_gbm, fit_lgbm, fit_xgb, goss_sample,
    predict_boosted, sigmoid, BoostParams, BoostVariant, BoostedModel, GossSample, EARLY_STOP_TOL,
};
pub use forest::{
    balanced_class_weights, bootstrap_sample, fit_cardioforest, out_of_bag, predict_forest,
    ClassWeight, ForestModel, ForestParams,
};
pub use crate::tree::{build_histograms, BinnedMatrix};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Model families, in their canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Cardioforest,
    Xgb,
    Lgbm,
    Gbm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Cardioforest, ModelKind::Xgb, ModelKind::Lgbm, ModelKind::Gbm];

    /// Position in [`ModelKind::ALL`]; used to derive per-model seeds.
    pub fn index(&self) -> usize {
        *self as usize
    }

    /// Identifier used on the command line and in model files.
    pub fn id(&self) -> &'static str {
        match self {
            ModelKind::Cardioforest => "cardioforest",
            ModelKind::Xgb => "xgb",
            ModelKind::Lgbm => "lgbm",
            ModelKind::Gbm => "gbm",
        }
    }

    /// Name used in reports.
    pub fn display_name(&self) -> &'static str {
        match self {
            ModelKind::Cardioforest => "CardioForest",
            ModelKind::Xgb => "XGBoost",
            ModelKind::Lgbm => "LightGBM",
            ModelKind::Gbm => "GradientBoosting",
        }
    }

    pub fn boost_variant(&self) -> Option<BoostVariant> {
        match self {
            ModelKind::Cardioforest => None,
            ModelKind::Xgb => Some(BoostVariant::Xgb),
            ModelKind::Lgbm => Some(BoostVariant::Lgbm),
            ModelKind::Gbm => Some(BoostVariant::Gbm),
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.id() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown model '{s}' (expected cardioforest, xgb, lgbm or gbm)")))
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// Hyperparameters for any of the four models.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Forest(ForestParams),
    Boost(BoostParams),
}

impl ModelSpec {
    /// The tuned defaults for `kind`.
    pub fn defaults(kind: ModelKind) -> Self {
        match kind.boost_variant() {
            None => ModelSpec::Forest(ForestParams::default()),
            Some(v) => ModelSpec::Boost(BoostParams::for_variant(v)),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Forest(_) => ModelKind::Cardioforest,
            ModelSpec::Boost(b) => match b.variant {
                BoostVariant::Gbm => ModelKind::Gbm,
                BoostVariant::Xgb => ModelKind::Xgb,
                BoostVariant::Lgbm => ModelKind::Lgbm,
            },
        }
    }

    /// Copy with every seed replaced by `seed`.
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            ModelSpec::Forest(p) => {
                let mut p = p.clone();
                p.seed = seed;
                p.tree.seed = seed;
                ModelSpec::Forest(p)
            }
            ModelSpec::Boost(p) => ModelSpec::Boost(BoostParams { seed, ..p.clone() }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Forest(p) => p.validate(),
            ModelSpec::Boost(p) => p.validate(),
        }
    }

    pub fn fit(&self, x: &Matrix, y: &[u8]) -> Result<Model> {
        match self {
            ModelSpec::Forest(p) => fit_cardioforest(x, y, p).map(Model::Forest),
            ModelSpec::Boost(p) => fit_boosted(x, y, p).map(Model::Boosted),
        }
    }
}

/// A fitted model of any family.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Forest(ForestModel),
    Boosted(BoostedModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Forest(_) => ModelKind::Cardioforest,
            Model::Boosted(b) => match b.variant {
                BoostVariant::Gbm => ModelKind::Gbm,
                BoostVariant::Xgb => ModelKind::Xgb,
                BoostVariant::Lgbm => ModelKind::Lgbm,
            },
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Forest(m) => m.n_features,
            Model::Boosted(m) => m.n_features,
        }
    }

    /// Labels and positive-class probabilities.
    pub fn predict(&self, x: &Matrix) -> Result<(Vec<u8>, Vec<f64>)> {
        match self {
            Model::Forest(m) => predict_forest(m, x),
            Model::Boosted(m) => predict_boosted(m, x),
        }
    }
}
