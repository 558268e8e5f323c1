//! Ten-fold cross-validation of all four models on synthetic data, printing
//! the per-fold report and each model's accuracy stability.

use std::time::Instant;

use cardioforest::dataio::{generate_synthetic, SynthConfig};
use cardioforest::ensemble::{ModelKind, ModelSpec};
use cardioforest::eval::{cross_validate, stability_stats, Metric};
use cardioforest::features::PreprocessConfig;

fn main() -> cardioforest::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let ds = generate_synthetic(&SynthConfig::calibrated(n, 0.1546, 42))?;
    let specs: Vec<ModelSpec> = ModelKind::ALL.into_iter().map(ModelSpec::defaults).collect();
    let start = Instant::now();
    let report = cross_validate(&specs, &ds, 10, 42, &PreprocessConfig::default())?;
    print!("{}", report.to_csv());
    for s in stability_stats(&report, Metric::Accuracy)? {
        println!(
            "{:<17} accuracy mean {:.4}  std {:.4}  cv {:.3}%",
            s.model, s.stats.mean, s.stats.std, s.stats.cv_percent
        );
    }
    eprintln!("{n} rows in {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
