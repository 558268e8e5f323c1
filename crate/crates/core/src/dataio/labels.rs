//! Categorical encoding and the WCT labeling rule.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// QRS duration (ms) above which a rhythm is labeled wide-complex.
pub const WCT_QRS_THRESHOLD_MS: f64 = 120.0;

/// Bijection between category text and dense integer codes `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelCodec {
    pub mapping: BTreeMap<String, usize>,
    pub inverse: Vec<String>,
}

impl LabelCodec {
    pub fn encode(&self, value: &str) -> Option<usize> {
        self.mapping.get(value).copied()
    }

    pub fn decode(&self, code: usize) -> Option<&str> {
        self.inverse.get(code).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.inverse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inverse.is_empty()
    }
}

/// Encode categories; distinct values are sorted lexicographically and
/// numbered in that order, so the codec does not depend on row order.
pub fn encode_labels<S: AsRef<str>>(column: &[Option<S>]) -> Result<(Vec<usize>, LabelCodec)> {
    if column.is_empty() {
        return Err(Error::Value("cannot encode an empty column".into()));
    }
    let mut distinct = BTreeSet::new();
    for (row, v) in column.iter().enumerate() {
        match v {
            Some(s) => {
                distinct.insert(s.as_ref());
            }
            None => return Err(Error::Value(format!("missing category at row {row}"))),
        }
    }
    let inverse: Vec<String> = distinct.into_iter().map(str::to_owned).collect();
    let mapping: BTreeMap<String, usize> =
        inverse.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    let codes = column.iter().flatten().map(|s| mapping[s.as_ref()]).collect();
    Ok((codes, LabelCodec { mapping, inverse }))
}

/// 1 when the QRS duration strictly exceeds 120 ms, else 0.
pub fn derive_wct_label(qrs_duration_ms: f64) -> Result<u8> {
    if !qrs_duration_ms.is_finite() || qrs_duration_ms < 0.0 {
        return Err(Error::Value(format!("invalid QRS duration {qrs_duration_ms}")));
    }
    Ok(u8::from(qrs_duration_ms > WCT_QRS_THRESHOLD_MS))
}
