use crate::dataio::Dataset;
use crate::error::Result;
use crate::matrix::Matrix;

pub const DERIVED_FEATURES: [&str; 3] = ["qrs_span", "qrs_rr_ratio", "hr_bpm"];

/// Append `qrs_span = qrs_end - qrs_onset` (ms), `qrs_rr_ratio =
/// qrs_duration / rr_interval` and `hr_bpm = 60000 / rr_interval`. Rows with
/// a non-positive or missing source get a missing value.
pub fn derive_interval_features(ds: &Dataset) -> Result<Dataset> {
    let idx = |name: &str| {
        ds.feature_index(name).ok_or_else(|| {
            crate::Error::Schema(format!("derived features need column '{name}'"))
        })
    };
    let (onset, end, dur, rr) =
        (idx("qrs_onset")?, idx("qrs_end")?, idx("qrs_duration")?, idx("rr_interval")?);
    let d = ds.n_features();
    let n = ds.n_rows();
    let val = |i: usize, j: usize| (!ds.missing_mask[i * d + j]).then(|| ds.features.get(i, j));

    let mut extra = Vec::with_capacity(n * 3);
    for i in 0..n {
        let span = match (val(i, onset), val(i, end)) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        };
        let rr_v = val(i, rr).filter(|&v| v > 0.0);
        let ratio = match (val(i, dur), rr_v) {
            (Some(q), Some(r)) => Some(q / r),
            _ => None,
        };
        let hr = rr_v.map(|r| 60_000.0 / r);
        extra.extend([span, ratio, hr]);
    }

    let add = Matrix::from_vec(n, 3, extra.iter().map(|v| v.unwrap_or(f64::NAN)).collect())?;
    let features = ds.features.hstack(&add)?;
    let mut mask = Vec::with_capacity(n * (d + 3));
    for i in 0..n {
        mask.extend_from_slice(&ds.missing_mask[i * d..(i + 1) * d]);
        mask.extend(extra[i * 3..i * 3 + 3].iter().map(Option::is_none));
    }
    let mut names = ds.feature_names.clone();
    names.extend(DERIVED_FEATURES.iter().map(|s| (*s).to_owned()));
    let out = Dataset { features, missing_mask: mask, feature_names: names, ..ds.clone() };
    out.validate()?;
    Ok(out)
}
