//! Run configuration: tuned defaults, then a JSON config file, then flags.

use std::path::Path;

use serde_json::{Map, Value};

use crate::dataio::ECG_FEATURES;
use crate::ensemble::{ClassWeight, ModelKind, ModelSpec};
use crate::error::{Error, Result};
use crate::features::PreprocessConfig;

/// Everything a train or cv run needs besides file paths.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub specs: Vec<ModelSpec>,
    pub seed: u64,
    /// Worker threads; 0 or negative means all available.
    pub threads: i64,
    pub k: usize,
    pub features: Vec<String>,
    pub derived: bool,
    pub preprocess: PreprocessConfig,
}

impl RunConfig {
    pub fn new(models: &[ModelKind]) -> Self {
        Self {
            specs: models.iter().map(|&k| ModelSpec::defaults(k)).collect(),
            seed: 42,
            threads: -1,
            k: 10,
            features: ECG_FEATURES.iter().map(|s| (*s).to_owned()).collect(),
            derived: false,
            preprocess: PreprocessConfig::default(),
        }
    }

    /// Apply a config file. Top-level keys are run settings or model
    /// parameters shared by every selected model; an object under a model id
    /// (`cardioforest`, `xgb`, `lgbm`, `gbm`) holds that model's parameters.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let doc: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("config {} is not valid JSON: {e}", path.display())))?;
        let Value::Object(map) = doc else {
            return Err(Error::Config("config must be a JSON object".into()));
        };
        let mut sections = Vec::new();
        for (key, value) in &map {
            if let Ok(kind) = key.parse::<ModelKind>() {
                sections.push((kind, value));
            } else {
                self.set(key, value)?;
            }
        }
        for (kind, value) in sections {
            let Value::Object(params) = value else {
                return Err(Error::Config(format!("config section '{key}' must be an object", key = kind.id())));
            };
            self.apply_section(kind, params)?;
        }
        Ok(())
    }

    fn apply_section(&mut self, kind: ModelKind, params: &Map<String, Value>) -> Result<()> {
        let mut probe = ModelSpec::defaults(kind);
        for (key, value) in params {
            if !set_param(&mut probe, key, value)? {
                return Err(Error::Config(format!("'{key}' is not a {} parameter", kind.id())));
            }
            for spec in self.specs.iter_mut().filter(|s| s.kind() == kind) {
                set_param(spec, key, value)?;
            }
        }
        Ok(())
    }

    /// Set a run setting or a parameter shared by the selected models.
    pub fn set(&mut self, key: &str, value: &Value) -> Result<()> {
        match key {
            "seed" | "random_state" => self.seed = as_u64(key, value)?,
            "threads" | "n_jobs" => {
                self.threads = value.as_i64().ok_or_else(|| bad(key, value, "an integer"))?
            }
            "k" => self.k = as_usize(key, value)?,
            "features" => {
                let list = value.as_array().ok_or_else(|| bad(key, value, "an array of names"))?;
                self.features = list
                    .iter()
                    .map(|v| v.as_str().map(str::to_owned).ok_or_else(|| bad(key, value, "an array of names")))
                    .collect::<Result<_>>()?;
            }
            "derived" => self.derived = as_bool(key, value)?,
            "standardize" => self.preprocess.standardize = as_bool(key, value)?,
            "correlation_threshold" => {
                self.preprocess.correlation_threshold = if value.is_null() { None } else { Some(as_f64(key, value)?) }
            }
            "pca_components" => {
                self.preprocess.pca_components = if value.is_null() { None } else { Some(as_usize(key, value)?) }
            }
            _ => {
                let mut known = false;
                // a value rejected by an unselected model still marks the key as known
                for kind in ModelKind::ALL {
                    known |= !matches!(set_param(&mut ModelSpec::defaults(kind), key, value), Ok(false));
                }
                if !known {
                    return Err(Error::Config(format!("unknown parameter '{key}'")));
                }
                let mut used = false;
                for spec in &mut self.specs {
                    used |= set_param(spec, key, value)?;
                }
                if !used {
                    let ids: Vec<&str> = self.specs.iter().map(|s| s.kind().id()).collect();
                    return Err(Error::Config(format!("'{key}' does not apply to {}", ids.join(", "))));
                }
            }
        }
        Ok(())
    }

    /// Check every setting before any work starts.
    pub fn validate(&self) -> Result<()> {
        for s in &self.specs {
            s.validate()?;
        }
        if self.k < 2 {
            return Err(Error::Config(format!("k must be at least 2, got {}", self.k)));
        }
        if self.features.is_empty() {
            return Err(Error::Config("no feature columns selected".into()));
        }
        if let Some(t) = self.preprocess.correlation_threshold {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Config(format!("correlation_threshold {t} outside (0, 1]")));
            }
        }
        if self.preprocess.pca_components == Some(0) {
            return Err(Error::Config("pca_components must be at least 1".into()));
        }
        Ok(())
    }
}

fn bad(key: &str, value: &Value, want: &str) -> Error {
    Error::Config(format!("'{key}' must be {want}, got {value}"))
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    v.as_f64().filter(|x| x.is_finite()).ok_or_else(|| bad(key, v, "a number"))
}

fn as_u64(key: &str, v: &Value) -> Result<u64> {
    v.as_u64().ok_or_else(|| bad(key, v, "a non-negative integer"))
}

fn as_usize(key: &str, v: &Value) -> Result<usize> {
    as_u64(key, v).map(|x| x as usize)
}

fn as_bool(key: &str, v: &Value) -> Result<bool> {
    v.as_bool().ok_or_else(|| bad(key, v, "true or false"))
}

fn as_opt_usize(key: &str, v: &Value) -> Result<Option<usize>> {
    if v.is_null() || v.as_str().is_some_and(|s| s.eq_ignore_ascii_case("none")) {
        Ok(None)
    } else {
        as_usize(key, v).map(Some)
    }
}

/// Set one named parameter on a spec. Returns false when the model family
/// has no such parameter.
pub fn set_param(spec: &mut ModelSpec, key: &str, v: &Value) -> Result<bool> {
    match spec {
        ModelSpec::Forest(p) => match key {
            "n_estimators" => p.n_estimators = as_usize(key, v)?,
            "max_depth" => p.tree.max_depth = as_opt_usize(key, v)?,
            "min_samples_split" => p.tree.min_samples_split = as_usize(key, v)?,
            "min_samples_leaf" => p.tree.min_samples_leaf = as_usize(key, v)?,
            "max_features" => p.tree.max_features = as_f64(key, v)?,
            "ccp_alpha" => p.tree.ccp_alpha = as_f64(key, v)?,
            "bootstrap" => p.bootstrap = as_bool(key, v)?,
            "oob_score" => p.oob_score = as_bool(key, v)?,
            "class_weight" => {
                p.class_weight = match v.as_str() {
                    _ if v.is_null() => ClassWeight::None,
                    Some("balanced") => ClassWeight::Balanced,
                    Some("none") => ClassWeight::None,
                    _ => return Err(bad(key, v, "\"balanced\" or \"none\"")),
                }
            }
            _ => return Ok(false),
        },
        ModelSpec::Boost(p) => match key {
            "n_estimators" => p.n_estimators = as_usize(key, v)?,
            "max_depth" => {
                p.max_depth = as_opt_usize(key, v)?
                    .ok_or_else(|| bad(key, v, "an integer for boosted models"))?
            }
            "learning_rate" => p.learning_rate = as_f64(key, v)?,
            "subsample" => p.subsample = as_f64(key, v)?,
            "colsample_bytree" => p.colsample_bytree = as_f64(key, v)?,
            "reg_alpha" => p.reg_alpha = as_f64(key, v)?,
            "reg_lambda" => p.reg_lambda = as_f64(key, v)?,
            "gamma" => p.gamma = as_f64(key, v)?,
            "min_child_samples" => p.min_child_samples = as_usize(key, v)?,
            "min_samples_split" => p.min_samples_split = as_usize(key, v)?,
            "min_samples_leaf" => p.min_samples_leaf = as_usize(key, v)?,
            "max_features" => p.max_features = as_f64(key, v)?,
            "validation_fraction" => p.validation_fraction = as_f64(key, v)?,
            "n_iter_no_change" => p.n_iter_no_change = as_opt_usize(key, v)?,
            "top_rate" => p.top_rate = as_f64(key, v)?,
            "other_rate" => p.other_rate = as_f64(key, v)?,
            "max_bins" => p.max_bins = as_usize(key, v)?,
            _ => return Ok(false),
        },
    }
    Ok(true)
}
