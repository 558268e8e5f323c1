//! Model files: a fitted model together with its preprocessing, stored as
//! JSON with full floating-point precision.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::{BoostParams, BoostedModel, ForestModel, ForestParams, Model, ModelKind};
use crate::error::{Error, Result};
use crate::features::Preprocess;
use crate::matrix::Matrix;
use crate::tree::Tree;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: Model,
    pub preprocess: Preprocess,
}

#[derive(Serialize, Deserialize)]
struct Doc {
    format_version: u32,
    model_type: ModelKind,
    /// Raw input columns, before preprocessing.
    feature_names: Vec<String>,
    params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class_weights: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    oob_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stopped_at: Option<usize>,
    trees: Vec<Tree>,
    preprocess: Preprocess,
}

impl ModelFile {
    pub fn new(model: Model, preprocess: Preprocess) -> Result<Self> {
        if model.n_features() != preprocess.output_features.len() {
            return Err(Error::Schema(format!(
                "model uses {} features, preprocessing yields {}",
                model.n_features(),
                preprocess.output_features.len()
            )));
        }
        Ok(Self { model, preprocess })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.preprocess.input_features
    }

    /// Preprocess raw feature rows and predict labels and probabilities.
    pub fn predict(&self, raw: &Matrix) -> Result<(Vec<u8>, Vec<f64>)> {
        self.model.predict(&self.preprocess.transform(raw)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let p = &self.preprocess;
        let doc = match &self.model {
            Model::Forest(m) => Doc {
                format_version: FORMAT_VERSION,
                model_type: ModelKind::Cardioforest,
                feature_names: p.input_features.clone(),
                params: serde_json::to_value(&m.params)?,
                base_score: None,
                learning_rate: None,
                class_weights: Some(m.class_weights),
                oob_score: m.oob_score,
                stopped_at: None,
                trees: m.trees.clone(),
                preprocess: p.clone(),
            },
            Model::Boosted(m) => Doc {
                format_version: FORMAT_VERSION,
                model_type: self.model.kind(),
                feature_names: p.input_features.clone(),
                params: serde_json::to_value(&m.params)?,
                base_score: Some(m.base_score),
                learning_rate: Some(m.learning_rate),
                class_weights: None,
                oob_score: None,
                stopped_at: Some(m.stopped_at),
                trees: m.trees.clone(),
                preprocess: p.clone(),
            },
        };
        Ok(serde_json::to_string(&doc)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Doc = serde_json::from_str(text)?;
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::Schema(format!("unsupported model format version {}", doc.format_version)));
        }
        if doc.feature_names != doc.preprocess.input_features {
            return Err(Error::Schema("feature_names disagree with the preprocessing inputs".into()));
        }
        let n_features = doc.preprocess.output_features.len();
        if let Some(bad) = doc.trees.iter().flat_map(Tree::split_features).find(|&f| f >= n_features) {
            return Err(Error::Schema(format!("tree splits on feature {bad} of {n_features}")));
        }
        let missing = |what: &str| Error::Schema(format!("{} model lacks {what}", doc.model_type));
        let model = match doc.model_type {
            ModelKind::Cardioforest => {
                let params: ForestParams = serde_json::from_value(doc.params)?;
                if doc.trees.is_empty() {
                    return Err(missing("trees"));
                }
                Model::Forest(ForestModel {
                    trees: doc.trees,
                    class_weights: doc.class_weights.ok_or_else(|| missing("class_weights"))?,
                    oob_score: doc.oob_score,
                    params,
                    n_features,
                })
            }
            kind => {
                let params: BoostParams = serde_json::from_value(doc.params)?;
                if Some(params.variant) != kind.boost_variant() {
                    return Err(Error::Schema("model_type disagrees with params.variant".into()));
                }
                Model::Boosted(BoostedModel {
                    variant: params.variant,
                    base_score: doc.base_score.ok_or_else(|| missing("base_score"))?,
                    learning_rate: doc.learning_rate.ok_or_else(|| missing("learning_rate"))?,
                    stopped_at: doc.stopped_at.unwrap_or(doc.trees.len()),
                    trees: doc.trees,
                    params,
                    n_features,
                })
            }
        };
        Self::new(model, doc.preprocess)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
