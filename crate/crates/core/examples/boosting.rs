//! The three gradient boosting variants with their tuned settings, plus a
//! look at one round of gradient-based one-sided sampling.

use cardioforest::dataio::{generate_synthetic, SynthConfig};
use cardioforest::ensemble::{fit_boosted, goss_sample, predict_boosted, BoostParams};
use cardioforest::eval::evaluate;
use cardioforest::features::{Preprocess, PreprocessConfig};

fn main() -> cardioforest::Result<()> {
    let train = generate_synthetic(&SynthConfig::calibrated(3000, 0.1546, 11))?;
    let test = generate_synthetic(&SynthConfig::calibrated(1000, 0.1546, 12))?;
    let pre = Preprocess::fit(&train.features, &train.feature_names, &PreprocessConfig::default())?;
    let (xtr, xte) = (pre.transform(&train.features)?, pre.transform(&test.features)?);

    for p in [BoostParams::gbm(), BoostParams::xgb(), BoostParams::lgbm()] {
        let m = fit_boosted(&xtr, &train.labels, &p)?;
        let (labels, probs) = predict_boosted(&m, &xte)?;
        let r = evaluate(&test.labels, &labels, &probs)?;
        println!(
            "{:<4} trees {:>2} (stopped at {:>2})  base {:+.3}  accuracy {:.4}  balanced {:.4}",
            p.variant.as_str(),
            m.trees.len(),
            m.stopped_at,
            m.base_score,
            r.accuracy,
            r.balanced_accuracy
        );
    }

    let gradients: Vec<f64> = (0..20).map(|i| (i as f64 - 9.5) / 10.0).collect();
    let s = goss_sample(&gradients, 0.2, 0.1, 5)?;
    println!("GOSS kept rows {:?}", s.indices);
    println!("with weights  {:?}", s.weights);
    Ok(())
}
