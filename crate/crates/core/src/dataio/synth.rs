//! Seeded synthetic ECG measurement tables.
//!
//! Each plausible measurement is a Gaussian truncated to its plausibility
//! interval, centred on the published cohort average. QRS duration is a
//! two-component mixture split at the 120 ms rule, mixed at the requested
//! prevalence, so the labeled fraction matches the prevalence in expectation.
//! QRS end is derived from onset plus duration with sub-millisecond jitter.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, ECG_FEATURES};
use super::labels::{derive_wct_label, WCT_QRS_THRESHOLD_MS};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Cohort averages used as calibration targets.
pub const TARGET_RR_INTERVAL_MS: f64 = 865.60;
pub const TARGET_QRS_DURATION_MS: f64 = 108.51;
pub const TARGET_QRS_ONSET_MS: f64 = 283.42;
pub const TARGET_QRS_END_MS: f64 = 391.66;
pub const TARGET_T_END_MS: f64 = 688.65;
pub const TARGET_QRS_AXIS_DEG: f64 = 107.37;
pub const TARGET_T_AXIS_DEG: f64 = 192.55;
/// Share of WCT rhythms in the reference cohort (123,653 of 800,035).
pub const TARGET_PREVALENCE: f64 = 0.1546;

const QRS_NARROW: (f64, f64, f64, f64) = (103.5, 10.0, 40.0, WCT_QRS_THRESHOLD_MS);
const QRS_WIDE: (f64, f64, f64, f64) = (140.0, 15.0, WCT_QRS_THRESHOLD_MS, 250.0);
const QRS_END_JITTER_SD: f64 = 0.3;
const QRS_END_JITTER_MAX: f64 = 0.9;
const P_DURATION: (f64, f64, f64, f64) = (110.0, 20.0, 40.0, 250.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub prevalence: f64,
    pub seed: u64,
    /// Means of the independently drawn columns.
    pub column_means: BTreeMap<String, f64>,
    pub column_stds: BTreeMap<String, f64>,
}

impl SynthConfig {
    /// Calibrated to the reference cohort. The P-wave columns have
    /// implausible published averages, so physiological values stand in.
    pub fn calibrated(n: usize, prevalence: f64, seed: u64) -> Self {
        let entries = [
            ("rr_interval", TARGET_RR_INTERVAL_MS, 180.0),
            ("p_onset", 170.0, 40.0),
            ("qrs_onset", TARGET_QRS_ONSET_MS, 25.0),
            ("t_end", TARGET_T_END_MS, 60.0),
            ("p_axis", 50.0, 35.0),
            ("qrs_axis", TARGET_QRS_AXIS_DEG, 60.0),
            ("t_axis", TARGET_T_AXIS_DEG, 80.0),
        ];
        Self {
            n,
            prevalence,
            seed,
            column_means: entries.iter().map(|(k, m, _)| ((*k).to_owned(), *m)).collect(),
            column_stds: entries.iter().map(|(k, _, s)| ((*k).to_owned(), *s)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.prevalence) {
            return Err(Error::Config(format!("prevalence {} outside [0, 1]", self.prevalence)));
        }
        for name in INDEPENDENT {
            let m = self.column_means.get(name).copied();
            let s = self.column_stds.get(name).copied();
            match (m, s) {
                (Some(m), Some(s)) if m.is_finite() && s.is_finite() && s >= 0.0 => {}
                _ => return Err(Error::Config(format!("bad mean/std for '{name}'"))),
            }
        }
        Ok(())
    }
}

const INDEPENDENT: [&str; 7] =
    ["rr_interval", "p_onset", "qrs_onset", "t_end", "p_axis", "qrs_axis", "t_axis"];

fn bounds(name: &str) -> (f64, f64) {
    match name {
        "rr_interval" => (200.0, 3000.0),
        "p_axis" | "qrs_axis" | "t_axis" => (-180.0, 360.0),
        _ => (0.0, 10_000.0),
    }
}

/// Rejection sampling from N(mean, sd) restricted to `lo < x <= hi` when
/// `open_low`, or `lo <= x <= hi` otherwise.
fn truncated(rng: &mut ChaCha8Rng, mean: f64, sd: f64, lo: f64, hi: f64, open_low: bool) -> f64 {
    if sd == 0.0 {
        return mean.clamp(lo, hi);
    }
    let normal = Normal::new(mean, sd).expect("finite, non-negative sd");
    for _ in 0..10_000 {
        let x = normal.sample(rng);
        let above = if open_low { x > lo } else { x >= lo };
        if above && x <= hi {
            return x;
        }
    }
    // Only reachable for intervals far in a tail; fall back to the midpoint.
    0.5 * (lo + hi)
}

pub fn generate_synthetic(c: &SynthConfig) -> Result<Dataset> {
    c.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let d = ECG_FEATURES.len();
    let mut data = Vec::with_capacity(c.n * d);
    let mut labels = Vec::with_capacity(c.n);
    let mut subject_ids = Vec::with_capacity(c.n);
    let mut study_ids = Vec::with_capacity(c.n);

    let draw = |rng: &mut ChaCha8Rng, name: &str| {
        let (lo, hi) = bounds(name);
        truncated(rng, c.column_means[name], c.column_stds[name], lo, hi, false)
    };

    for i in 0..c.n {
        let rr = draw(&mut rng, "rr_interval");
        let p_onset = draw(&mut rng, "p_onset");
        let (pm, ps, plo, phi) = P_DURATION;
        let p_end = p_onset + truncated(&mut rng, pm, ps, plo, phi, false);
        let qrs_onset = draw(&mut rng, "qrs_onset");
        let t_end = draw(&mut rng, "t_end");
        let p_axis = draw(&mut rng, "p_axis");
        let qrs_axis = draw(&mut rng, "qrs_axis");
        let t_axis = draw(&mut rng, "t_axis");
        let wide = rng.random::<f64>() < c.prevalence;
        let qrs_duration = if wide {
            let (m, s, lo, hi) = QRS_WIDE;
            truncated(&mut rng, m, s, lo, hi, true)
        } else {
            let (m, s, lo, hi) = QRS_NARROW;
            truncated(&mut rng, m, s, lo, hi, false)
        };
        let noise = Normal::new(0.0, QRS_END_JITTER_SD)
            .expect("valid sd")
            .sample(&mut rng)
            .clamp(-QRS_END_JITTER_MAX, QRS_END_JITTER_MAX);
        let qrs_end = qrs_onset + qrs_duration + noise;

        data.extend_from_slice(&[
            rr, p_onset, p_end, qrs_onset, qrs_end, t_end, p_axis, qrs_axis, t_axis, qrs_duration,
        ]);
        labels.push(derive_wct_label(qrs_duration)?);
        subject_ids.push(10_000_000 + (i / 5) as i64);
        study_ids.push(50_000_000 + i as i64);
    }

    let mut ds = Dataset::new(
        Matrix::from_vec(c.n, d, data)?,
        labels,
        ECG_FEATURES.iter().map(|s| (*s).to_owned()).collect(),
    )?;
    ds.subject_ids = subject_ids;
    ds.study_ids = study_ids;
    Ok(ds)
}
