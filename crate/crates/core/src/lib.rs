//! Tree ensembles for wide-QRS tachycardia detection from tabular ECG
//! measurements: data preparation, feature engineering, a bagged CART
//! forest with cost-complexity pruning, three gradient boosting variants,
//! cross-validated evaluation and exact TreeSHAP explanations.

// `!(x > 0.0)` style checks reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dataio;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod explain;
pub mod features;
pub mod matrix;
pub mod model;
pub mod rng;
pub mod tree;

pub use error::{Error, Result};
pub use matrix::Matrix;
