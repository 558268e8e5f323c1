//! Histogram feature binning.

use serde::{Deserialize, Serialize};

use super::midpoint;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Per-feature bin indices (column-major) and the boundaries between bins.
///
/// Feature `j` has `bin_upper_bounds[j].len() + 1` bins; the last bin is
/// unbounded above. A value's bin is the number of boundaries strictly
/// below it, so `value <= bin_upper_bounds[j][b]` exactly when its bin is
/// at most `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedMatrix {
    pub bin_indices: Vec<Vec<u8>>,
    pub bin_upper_bounds: Vec<Vec<f64>>,
}

impl BinnedMatrix {
    pub fn n_rows(&self) -> usize {
        self.bin_indices.first().map_or(0, Vec::len)
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.bin_upper_bounds[feature].len() + 1
    }
}

fn bounds_for(col: &[f64], max_bins: usize) -> Vec<f64> {
    let mut sorted = col.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() <= max_bins {
        return distinct.windows(2).map(|w| midpoint(w[0], w[1])).collect();
    }
    let n = sorted.len();
    let mut bounds: Vec<f64> = Vec::with_capacity(max_bins - 1);
    for k in 1..max_bins {
        let v = sorted[k * n / max_bins - 1];
        // next distinct value above v
        let pos = distinct.partition_point(|&u| u <= v);
        if pos >= distinct.len() {
            break;
        }
        let b = midpoint(v, distinct[pos]);
        if bounds.last().is_none_or(|&last| b > last) {
            bounds.push(b);
        }
    }
    bounds
}

/// Bin every feature into at most `max_bins` quantile bins. Features with
/// few distinct values get one bin per value.
pub fn build_histograms(x: &Matrix, max_bins: usize) -> Result<BinnedMatrix> {
    if !(2..=255).contains(&max_bins) {
        return Err(Error::Config(format!("max_bins {max_bins} outside [2, 255]")));
    }
    if x.as_slice().iter().any(|v| v.is_nan()) {
        return Err(Error::Value("cannot bin NaN values".into()));
    }
    let mut bin_indices = Vec::with_capacity(x.n_cols());
    let mut bin_upper_bounds = Vec::with_capacity(x.n_cols());
    for j in 0..x.n_cols() {
        let col = x.column(j);
        let bounds = bounds_for(&col, max_bins);
        bin_indices.push(col.iter().map(|&v| bounds.partition_point(|&b| b < v) as u8).collect());
        bin_upper_bounds.push(bounds);
    }
    Ok(BinnedMatrix { bin_indices, bin_upper_bounds })
}
