//! Ingestion, cleaning, imputation, encoding, labeling and synthetic data.

mod clean;
mod dataset;
mod impute;
mod labels;
mod prep;
mod synth;
mod table;

pub use clean::{
    deduplicate, normalize_timestamps, parse_timestamp, repair_implausible, Interval,
    PlausibilityRule, PlausibilityRules,
};
pub use dataset::{Dataset, ECG_FEATURES, LABEL_COLUMN, STUDY_COLUMN, SUBJECT_COLUMN};
pub use impute::{apply_impute, fit_impute_median, median, ImputerState};
pub use labels::{derive_wct_label, encode_labels, LabelCodec, WCT_QRS_THRESHOLD_MS};
pub use prep::{prepare, PrepConfig, PrepReport};
pub use synth::{
    generate_synthetic, SynthConfig, TARGET_PREVALENCE, TARGET_QRS_AXIS_DEG,
    TARGET_QRS_DURATION_MS, TARGET_QRS_END_MS, TARGET_QRS_ONSET_MS, TARGET_RR_INTERVAL_MS,
    TARGET_T_AXIS_DEG, TARGET_T_END_MS,
};
pub use table::{parse_measurements_csv, Cell, Column, RawTable, NUMERIC_FRACTION};
