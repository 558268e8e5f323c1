//! Exact TreeSHAP attributions for a CardioForest and a boosted model, with
//! the global importance ranking and a local-accuracy check.

use cardioforest::dataio::{generate_synthetic, SynthConfig};
use cardioforest::ensemble::{ForestParams, ModelKind, ModelSpec};
use cardioforest::explain::{ensemble_shap, explained_output, shap_summary};
use cardioforest::features::{Preprocess, PreprocessConfig};

fn main() -> cardioforest::Result<()> {
    let ds = generate_synthetic(&SynthConfig::calibrated(2000, 0.1546, 21))?;
    let pre = Preprocess::fit(&ds.features, &ds.feature_names, &PreprocessConfig::default())?;
    let x = pre.transform(&ds.features)?;
    let names = &pre.output_features;

    let specs = [
        ModelSpec::Forest(ForestParams { n_estimators: 100, ..Default::default() }),
        ModelSpec::defaults(ModelKind::Xgb),
    ];
    for spec in specs {
        let model = spec.fit(&x, &ds.labels)?;
        let shap = ensemble_shap(&model, &x)?;
        let ranking = shap_summary(&shap, names)?;
        println!("{} ({} space, base {:.4})", model.kind().display_name(), shap.space.as_str(), shap.base_value);
        for e in ranking.entries.iter().take(3) {
            println!("  {}. {:<14} mean |SHAP| {:.4}", e.rank, e.feature, e.mean_abs_shap);
        }
        let out = explained_output(&model, &x)?;
        let worst = (0..x.n_rows())
            .map(|i| {
                let sum: f64 = (0..x.n_cols()).map(|j| shap.values.get(i, j)).sum();
                (shap.base_value + sum - out[i]).abs()
            })
            .fold(0.0, f64::max);
        println!("  largest local-accuracy gap {worst:.2e}");
    }
    Ok(())
}
