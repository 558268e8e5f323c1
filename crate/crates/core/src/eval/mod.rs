//! Metrics, stratified cross-validation and fold-stability statistics.

mod cv;
mod metrics;
mod stability;

pub use cv::{
    cross_validate, fold_seed, stratified_kfold, CvReport, FoldAssignment, FoldResult, MetricAggregate,
    ModelAggregate, CSV_HEADER,
};
pub use metrics::{confusion, evaluate, metrics_suite, roc_auc, ConfusionCounts, Metric, MetricsRow};
pub use stability::{describe, read_cv_csv, stability_from_csv, stability_stats, ModelStability, Stability};
