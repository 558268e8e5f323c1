//! Row-level cleaning: duplicates, timestamps, implausible values.

use std::collections::{BTreeMap, HashSet};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::table::{Cell, Column, RawTable};
use crate::error::{Error, Result};

/// Keep the first occurrence of every key tuple. Returns the filtered table
/// and the number of rows removed.
pub fn deduplicate(t: &RawTable, keys: &[&str]) -> Result<(RawTable, usize)> {
    let key_cols: Vec<&Column> = keys.iter().map(|k| t.require(k)).collect::<Result<_>>()?;
    let mut seen = HashSet::with_capacity(t.n_rows());
    let mut keep = Vec::with_capacity(t.n_rows());
    for i in 0..t.n_rows() {
        let key: Vec<String> = key_cols
            .iter()
            .map(|c| match &c.cells[i] {
                Cell::Missing => "\u{0}missing".to_owned(),
                Cell::Number(v) => format!("n{v}"),
                Cell::Text(s) => format!("s{s}"),
            })
            .collect();
        if seen.insert(key) {
            keep.push(i);
        }
    }
    let removed = t.n_rows() - keep.len();
    Ok((t.select_rows(&keep), removed))
}

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

/// Seconds since the Unix epoch for a `YYYY-MM-DD HH:MM:SS` UTC timestamp.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    NaiveDateTime::parse_from_str(s.trim(), TIMESTAMP_FORMAT)
        .ok()
        .map(|dt| dt.and_utc().timestamp())
}

/// Convert timestamp text in the named columns to integer epoch seconds.
pub fn normalize_timestamps(t: &RawTable, columns: &[&str]) -> Result<RawTable> {
    let mut out = t.clone();
    for &name in columns {
        let col = out
            .column_mut(name)
            .ok_or_else(|| Error::Schema(format!("missing column '{name}'")))?;
        for (row, cell) in col.cells.iter_mut().enumerate() {
            let converted = match cell {
                Cell::Missing => continue,
                Cell::Text(s) => parse_timestamp(s),
                Cell::Number(_) => None,
            };
            match converted {
                Some(secs) => *cell = Cell::Number(secs as f64),
                None => {
                    return Err(Error::Value(format!(
                        "column '{name}' row {row}: unparseable timestamp '{cell}'"
                    )))
                }
            }
        }
        col.non_numeric.clear();
    }
    Ok(out)
}

/// Closed plausibility interval for one column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min <= max) {
            return Err(Error::Config(format!("interval [{min}, {max}] has min > max")));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlausibilityRule {
    pub interval: Interval,
    pub unit: String,
}

/// Per-column plausibility intervals.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PlausibilityRules {
    pub rules: BTreeMap<String, PlausibilityRule>,
}

impl PlausibilityRules {
    pub fn insert(&mut self, column: &str, min: f64, max: f64, unit: &str) -> Result<()> {
        let interval = Interval::new(min, max)?;
        self.rules
            .insert(column.to_owned(), PlausibilityRule { interval, unit: unit.to_owned() });
        Ok(())
    }

    /// Intervals for the ten ECG measurement columns: RR interval
    /// [200, 3000] ms, onsets/ends/durations [0, 10000] ms, axes [-180, 360] degrees.
    pub fn ecg_defaults() -> Self {
        let mut r = Self::default();
        r.insert("rr_interval", 200.0, 3000.0, "ms").unwrap();
        for c in ["p_onset", "p_end", "qrs_onset", "qrs_end", "t_end", "qrs_duration"] {
            r.insert(c, 0.0, 10_000.0, "ms").unwrap();
        }
        for c in ["p_axis", "qrs_axis", "t_axis"] {
            r.insert(c, -180.0, 360.0, "degrees").unwrap();
        }
        r
    }
}

/// Replace out-of-interval values with missing. Text cells in a ruled column
/// are treated as implausible too. Columns without a rule, and ruled columns
/// absent from the table, are left alone.
pub fn repair_implausible(
    t: &RawTable,
    rules: &PlausibilityRules,
) -> (RawTable, BTreeMap<String, usize>) {
    let mut out = t.clone();
    let mut flagged = BTreeMap::new();
    for (name, rule) in &rules.rules {
        let Some(col) = out.column_mut(name) else { continue };
        let mut count = 0;
        for cell in col.cells.iter_mut() {
            let bad = match cell {
                Cell::Number(v) => !rule.interval.contains(*v),
                Cell::Text(_) => true,
                Cell::Missing => false,
            };
            if bad {
                *cell = Cell::Missing;
                count += 1;
            }
        }
        col.non_numeric.clear();
        flagged.insert(name.clone(), count);
    }
    (out, flagged)
}
