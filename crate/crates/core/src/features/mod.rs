//! Fit/transform feature engineering.

mod correlation;
mod derived;
mod pca;
mod pipeline;
mod rolling;
mod standardize;

pub use correlation::{correlation_prune, pearson};
pub use derived::{derive_interval_features, DERIVED_FEATURES};
pub use pca::{apply_pca, fit_pca, inverse_pca, PcaState};
pub use pipeline::{Preprocess, PreprocessConfig, DEFAULT_CORRELATION_THRESHOLD};
pub use rolling::{rolling_stats, RollingStats};
pub use standardize::{apply_standardize, column_mean_std, fit_standardize, StandardizerState};
