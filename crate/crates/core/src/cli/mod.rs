//! Command-line front end: synth, prep, train, predict, cv, explain and
//! report.
//!
//! Exit codes: 0 success, 2 usage or invalid configuration, 3 unreadable or
//! malformed data, 4 model errors (fit failures, feature mismatches,
//! unloadable model files). Logs go to standard error; data goes to files.

mod commands;
mod params;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::error::Error;

pub use params::{set_param, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_MODEL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "cardioforest", version, about = "Tree ensembles for wide-QRS tachycardia detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a calibrated synthetic measurements table.
    Synth(SynthArgs),
    /// Clean a raw measurements table and write a cleaning report.
    Prep(PrepArgs),
    /// Fit one model and save it with its preprocessing.
    Train(TrainArgs),
    /// Score a table with a saved model.
    Predict(PredictArgs),
    /// Stratified k-fold cross-validation of one or more models.
    Cv(CvArgs),
    /// Per-sample TreeSHAP attributions and a global importance ranking.
    Explain(ExplainArgs),
    /// Fold stability (mean, sample std, CV%) of one metric in a CV report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = crate::dataio::TARGET_PREVALENCE)]
    prevalence: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PrepArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// JSON cleaning report.
    #[arg(long)]
    report: PathBuf,
}

/// Settings shared by train and cv; unset flags leave file or default
/// values alone.
#[derive(Debug, Args)]
struct RunArgs {
    /// JSON file of parameters; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, visible_alias = "random_state")]
    seed: Option<u64>,
    /// Worker threads; -1 uses every core. Outputs do not depend on it.
    #[arg(long, visible_alias = "n_jobs", allow_negative_numbers = true)]
    threads: Option<i64>,
    /// Comma-separated feature columns.
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,
    /// Append the derived interval features.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    derived: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    standardize: Option<bool>,
    /// Absolute correlation above which a column is dropped, or "none".
    #[arg(long = "correlation-threshold", visible_alias = "correlation_threshold")]
    correlation_threshold: Option<String>,
    #[arg(long = "pca-components", visible_alias = "pca_components")]
    pca_components: Option<usize>,
    #[command(flatten)]
    params: ParamArgs,
}

/// Model hyperparameters under their conventional names.
#[derive(Debug, Args)]
struct ParamArgs {
    #[arg(long = "n-estimators", visible_alias = "n_estimators")]
    n_estimators: Option<usize>,
    /// Integer, or "none" for unlimited forest trees.
    #[arg(long = "max-depth", visible_alias = "max_depth")]
    max_depth: Option<String>,
    #[arg(long = "min-samples-split", visible_alias = "min_samples_split")]
    min_samples_split: Option<usize>,
    #[arg(long = "min-samples-leaf", visible_alias = "min_samples_leaf")]
    min_samples_leaf: Option<usize>,
    #[arg(long = "max-features", visible_alias = "max_features")]
    max_features: Option<f64>,
    #[arg(long = "ccp-alpha", visible_alias = "ccp_alpha")]
    ccp_alpha: Option<f64>,
    /// "balanced" or "none".
    #[arg(long = "class-weight", visible_alias = "class_weight")]
    class_weight: Option<String>,
    #[arg(long)]
    bootstrap: Option<bool>,
    #[arg(long = "oob-score", visible_alias = "oob_score")]
    oob_score: Option<bool>,
    #[arg(long = "learning-rate", visible_alias = "learning_rate")]
    learning_rate: Option<f64>,
    #[arg(long)]
    subsample: Option<f64>,
    #[arg(long = "colsample-bytree", visible_alias = "colsample_bytree")]
    colsample_bytree: Option<f64>,
    #[arg(long = "reg-alpha", visible_alias = "reg_alpha")]
    reg_alpha: Option<f64>,
    #[arg(long = "reg-lambda", visible_alias = "reg_lambda")]
    reg_lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "min-child-samples", visible_alias = "min_child_samples")]
    min_child_samples: Option<usize>,
    #[arg(long = "validation-fraction", visible_alias = "validation_fraction")]
    validation_fraction: Option<f64>,
    /// Integer, or "none" to disable early stopping.
    #[arg(long = "n-iter-no-change", visible_alias = "n_iter_no_change")]
    n_iter_no_change: Option<String>,
    /// GOSS fraction of large-gradient rows kept.
    #[arg(long = "top-rate", visible_alias = "top_rate")]
    top_rate: Option<f64>,
    /// GOSS fraction of small-gradient rows sampled.
    #[arg(long = "other-rate", visible_alias = "other_rate")]
    other_rate: Option<f64>,
    #[arg(long = "max-bins", visible_alias = "max_bins")]
    max_bins: Option<usize>,
}

fn text_value(s: &str) -> Value {
    if s.eq_ignore_ascii_case("none") || s.eq_ignore_ascii_case("null") {
        Value::Null
    } else if let Ok(v) = s.parse::<u64>() {
        Value::from(v)
    } else if let Ok(v) = s.parse::<f64>() {
        Value::from(v)
    } else {
        Value::from(s)
    }
}

impl ParamArgs {
    fn pairs(&self) -> Vec<(&'static str, Value)> {
        let mut out = Vec::new();
        let mut push = |k: &'static str, v: Option<Value>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        push("n_estimators", self.n_estimators.map(Value::from));
        push("max_depth", self.max_depth.as_deref().map(text_value));
        push("min_samples_split", self.min_samples_split.map(Value::from));
        push("min_samples_leaf", self.min_samples_leaf.map(Value::from));
        push("max_features", self.max_features.map(Value::from));
        push("ccp_alpha", self.ccp_alpha.map(Value::from));
        push("class_weight", self.class_weight.as_deref().map(Value::from));
        push("bootstrap", self.bootstrap.map(Value::from));
        push("oob_score", self.oob_score.map(Value::from));
        push("learning_rate", self.learning_rate.map(Value::from));
        push("subsample", self.subsample.map(Value::from));
        push("colsample_bytree", self.colsample_bytree.map(Value::from));
        push("reg_alpha", self.reg_alpha.map(Value::from));
        push("reg_lambda", self.reg_lambda.map(Value::from));
        push("gamma", self.gamma.map(Value::from));
        push("min_child_samples", self.min_child_samples.map(Value::from));
        push("validation_fraction", self.validation_fraction.map(Value::from));
        push("n_iter_no_change", self.n_iter_no_change.as_deref().map(text_value));
        push("top_rate", self.top_rate.map(Value::from));
        push("other_rate", self.other_rate.map(Value::from));
        push("max_bins", self.max_bins.map(Value::from));
        out
    }
}

impl RunArgs {
    /// Defaults, then the config file, then flags.
    fn resolve(&self, models: &[crate::ensemble::ModelKind]) -> crate::Result<RunConfig> {
        let mut rc = RunConfig::new(models);
        if let Some(path) = &self.config {
            rc.apply_file(path)?;
        }
        let mut flags: Vec<(&str, Value)> = Vec::new();
        if let Some(s) = self.seed {
            flags.push(("seed", s.into()));
        }
        if let Some(t) = self.threads {
            flags.push(("threads", t.into()));
        }
        if let Some(f) = &self.features {
            flags.push(("features", f.clone().into()));
        }
        if let Some(d) = self.derived {
            flags.push(("derived", d.into()));
        }
        if let Some(s) = self.standardize {
            flags.push(("standardize", s.into()));
        }
        if let Some(c) = &self.correlation_threshold {
            flags.push(("correlation_threshold", text_value(c)));
        }
        if let Some(p) = self.pca_components {
            flags.push(("pca_components", p.into()));
        }
        flags.extend(self.params.pairs());
        for (k, v) in &flags {
            rc.set(k, v)?;
        }
        rc.validate()?;
        Ok(rc)
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// cardioforest, xgb, lgbm or gbm.
    #[arg(long)]
    model: String,
    #[arg(long)]
    data: PathBuf,
    /// Model JSON.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Model JSON written by train.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// CSV of sample_id, probability, label.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, visible_alias = "n_jobs", allow_negative_numbers = true, default_value_t = -1)]
    threads: i64,
}

#[derive(Debug, Args)]
struct CvArgs {
    /// Comma-separated model ids.
    #[arg(long, value_delimiter = ',', default_value = "cardioforest,xgb,lgbm,gbm")]
    models: Vec<String>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    /// Per-fold test metrics CSV.
    #[arg(long)]
    out: PathBuf,
    /// Aggregate JSON with train/test statistics per metric.
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Per-sample attributions CSV.
    #[arg(long)]
    out: PathBuf,
    /// Importance ranking CSV.
    #[arg(long)]
    summary: PathBuf,
    #[arg(long, visible_alias = "n_jobs", allow_negative_numbers = true, default_value_t = -1)]
    threads: i64,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// CV report CSV written by cv.
    #[arg(long)]
    cv: PathBuf,
    #[arg(long, default_value = "accuracy")]
    metric: String,
    #[arg(long)]
    out: PathBuf,
}

/// An error together with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: Error,
}

impl Failure {
    /// Errors met while reading or validating input data.
    fn data(error: Error) -> Self {
        let code = match error {
            Error::Config(_) => EXIT_USAGE,
            Error::Fit(_) => EXIT_MODEL,
            _ => EXIT_DATA,
        };
        Self { code, error }
    }

    /// Errors met while loading, fitting or applying a model.
    fn model(error: Error) -> Self {
        let code = match error {
            Error::Config(_) => EXIT_USAGE,
            _ => EXIT_MODEL,
        };
        Self { code, error }
    }

    fn usage(error: Error) -> Self {
        Self { code: EXIT_USAGE, error }
    }
}

/// Parse arguments, run one command and return its exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Prep(a) => commands::prep(&a),
        Command::Train(a) => commands::train(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Cv(a) => commands::cv(&a),
        Command::Explain(a) => commands::explain(&a),
        Command::Report(a) => commands::report(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            log::error!("{}", f.error);
            f.code
        }
    }
}
