//! Fold-to-fold stability: mean, sample standard deviation and coefficient
//! of variation of a metric.

use serde::{Deserialize, Serialize};

use super::cv::{CvReport, CSV_HEADER};
use super::metrics::Metric;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub n: usize,
    pub mean: f64,
    /// Sample (n - 1) standard deviation.
    pub std: f64,
    /// `100 * std / mean`.
    pub cv_percent: f64,
}

pub fn describe(values: &[f64]) -> Result<Stability> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Value(format!("stability needs at least two values, got {n}")));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if mean == 0.0 {
        return Err(Error::Value("coefficient of variation undefined for zero mean".into()));
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let std = (ss / (n - 1) as f64).sqrt();
    Ok(Stability { n, mean, std, cv_percent: 100.0 * std / mean })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelStability {
    pub model: String,
    pub stats: Stability,
}

/// Stability of one test metric for every model in the report.
pub fn stability_stats(report: &CvReport, metric: Metric) -> Result<Vec<ModelStability>> {
    report
        .models
        .iter()
        .map(|&m| {
            let vals: Vec<f64> =
                report.rows_for(m).filter_map(|r| r.test.as_ref().and_then(|t| metric.of(t))).collect();
            Ok(ModelStability { model: m.display_name().to_owned(), stats: describe(&vals)? })
        })
        .collect()
}

/// Per-model metric columns read back from a report CSV, models in order of
/// first appearance.
pub fn read_cv_csv(text: &str, metric: Metric) -> Result<Vec<(String, Vec<f64>)>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col_of = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(format!("report is missing column '{name}'")))
    };
    let model_col = col_of(CSV_HEADER[0])?;
    let metric_col = col_of(metric.column())?;
    let mut out: Vec<(String, Vec<f64>)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let model = rec.get(model_col).unwrap_or_default().trim().to_owned();
        let raw = rec.get(metric_col).unwrap_or_default().trim();
        let pos = match out.iter().position(|(m, _)| *m == model) {
            Some(p) => p,
            None => {
                out.push((model, Vec::new()));
                out.len() - 1
            }
        };
        // empty cells are failed folds or undefined metrics
        if !raw.is_empty() {
            let v: f64 = raw
                .parse()
                .map_err(|_| Error::Parse { row: i + 1, message: format!("'{raw}' is not a number") })?;
            out[pos].1.push(v);
        }
    }
    Ok(out)
}

/// [`describe`] applied to each model's column of a report CSV.
pub fn stability_from_csv(text: &str, metric: Metric) -> Result<Vec<ModelStability>> {
    read_cv_csv(text, metric)?
        .into_iter()
        .map(|(model, vals)| Ok(ModelStability { model, stats: describe(&vals)? }))
        .collect()
}
