//! Median imputation.

use serde::{Deserialize, Serialize};

use super::table::{Cell, RawTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputerState {
    pub fitted_columns: Vec<String>,
    pub medians: Vec<f64>,
}

/// Median of finite values; the mean of the two central order statistics for
/// an even count. `None` for an empty slice.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

pub fn fit_impute_median(t: &RawTable, columns: &[&str]) -> Result<ImputerState> {
    let mut medians = Vec::with_capacity(columns.len());
    for &name in columns {
        let col = t.require(name)?;
        let values: Vec<f64> = col.cells.iter().filter_map(Cell::as_number).collect();
        let m = median(&values).ok_or_else(|| {
            Error::Fit(format!("column '{name}' has no numeric values to take a median of"))
        })?;
        medians.push(m);
    }
    Ok(ImputerState { fitted_columns: columns.iter().map(|s| (*s).to_owned()).collect(), medians })
}

/// Fill missing (and non-numeric) cells of fitted columns with the stored
/// medians. Returns the table and per-column fill counts.
pub fn apply_impute(t: &RawTable, s: &ImputerState) -> Result<(RawTable, Vec<usize>)> {
    let mut out = t.clone();
    let mut counts = Vec::with_capacity(s.fitted_columns.len());
    for (name, &m) in s.fitted_columns.iter().zip(&s.medians) {
        let col = out
            .column_mut(name)
            .ok_or_else(|| Error::Schema(format!("missing column '{name}'")))?;
        let mut filled = 0;
        for cell in col.cells.iter_mut() {
            if !matches!(cell, Cell::Number(_)) {
                *cell = Cell::Number(m);
                filled += 1;
            }
        }
        col.non_numeric.clear();
        counts.push(filled);
    }
    Ok((out, counts))
}
