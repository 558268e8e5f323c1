//! Derived interval features, correlation pruning, standardization and PCA
//! on synthetic measurements.

use cardioforest::dataio::{generate_synthetic, SynthConfig};
use cardioforest::features::{derive_interval_features, rolling_stats, Preprocess, PreprocessConfig};

fn main() -> cardioforest::Result<()> {
    let ds = derive_interval_features(&generate_synthetic(&SynthConfig::calibrated(2000, 0.1546, 7))?)?;
    println!("features: {}", ds.feature_names.join(", "));

    let pre = Preprocess::fit(&ds.features, &ds.feature_names, &PreprocessConfig::default())?;
    let dropped: Vec<&str> = (0..ds.n_features())
        .filter(|j| !pre.kept.contains(j))
        .map(|j| ds.feature_names[j].as_str())
        .collect();
    println!("dropped as highly correlated: {}", dropped.join(", "));

    let cfg = PreprocessConfig { pca_components: Some(4), ..Default::default() };
    let pca = Preprocess::fit(&ds.features, &ds.feature_names, &cfg)?;
    if let Some(state) = &pca.pca {
        for (name, r) in pca.output_features.iter().zip(&state.explained_variance_ratio) {
            println!("{name}: {:.1}% of variance", 100.0 * r);
        }
    }
    let z = pca.transform(&ds.features)?;
    println!("transformed shape {} x {}", z.n_rows(), z.n_cols());

    let qrs = ds.features.column(ds.feature_index("qrs_duration").expect("present"));
    let roll = rolling_stats(&qrs[..50], 10)?;
    println!("first rolling QRS mean {:.2}, std {:.2}, skew {:.3}", roll.means[0], roll.stds[0], roll.skews[0]);
    Ok(())
}
