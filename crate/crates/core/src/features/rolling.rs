use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trailing-window statistics; entry `k` covers `series[k..k + window]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingStats {
    pub window: usize,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub skews: Vec<f64>,
}

/// Sample standard deviation and adjusted Fisher-Pearson skewness over each
/// window. Skewness is 0 for zero-spread windows and windows shorter than 3.
pub fn rolling_stats(series: &[f64], window: usize) -> Result<RollingStats> {
    if window == 0 || window > series.len() {
        return Err(Error::Config(format!(
            "window {window} invalid for series of length {}",
            series.len()
        )));
    }
    let n = window as f64;
    let mut out = RollingStats { window, means: vec![], stds: vec![], skews: vec![] };
    for w in series.windows(window) {
        let mean = w.iter().sum::<f64>() / n;
        let m2 = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let m3 = w.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
        let std = if window > 1 { (m2 * n / (n - 1.0)).sqrt() } else { 0.0 };
        let skew = if window < 3 || std == 0.0 || m2 <= 0.0 {
            0.0
        } else {
            (n * (n - 1.0)).sqrt() / (n - 2.0) * m3 / m2.powf(1.5)
        };
        out.means.push(mean);
        out.stds.push(std);
        out.skews.push(skew);
    }
    Ok(out)
}
