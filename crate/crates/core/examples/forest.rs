//! Fit the tuned CardioForest, report its out-of-bag accuracy, and round-trip
//! it through a model file.

use cardioforest::dataio::{generate_synthetic, SynthConfig};
use cardioforest::ensemble::{fit_cardioforest, ForestParams, Model};
use cardioforest::eval::evaluate;
use cardioforest::features::{Preprocess, PreprocessConfig};
use cardioforest::model::ModelFile;

fn main() -> cardioforest::Result<()> {
    let train = generate_synthetic(&SynthConfig::calibrated(3000, 0.1546, 1))?;
    let test = generate_synthetic(&SynthConfig::calibrated(1000, 0.1546, 2))?;
    let pre = Preprocess::fit(&train.features, &train.feature_names, &PreprocessConfig::default())?;
    let x = pre.transform(&train.features)?;

    let params = ForestParams { n_estimators: 200, ..Default::default() };
    let forest = fit_cardioforest(&x, &train.labels, &params)?;
    println!("class weights {:?}", forest.class_weights);
    println!("out-of-bag accuracy {:.4}", forest.oob_score.unwrap_or(f64::NAN));
    let mean_leaves = forest.trees.iter().map(|t| t.n_leaves()).sum::<usize>() as f64 / forest.trees.len() as f64;
    println!("mean leaves per pruned tree {mean_leaves:.1}");

    let file = ModelFile::new(Model::Forest(forest), pre)?;
    let reloaded = ModelFile::from_json(&file.to_json()?)?;
    let (labels, probs) = reloaded.predict(&test.features)?;
    let m = evaluate(&test.labels, &labels, &probs)?;
    println!(
        "held-out accuracy {:.4}, balanced accuracy {:.4}, ROC AUC {:.4}",
        m.accuracy,
        m.balanced_accuracy,
        m.roc_auc.unwrap_or(f64::NAN)
    );
    Ok(())
}
