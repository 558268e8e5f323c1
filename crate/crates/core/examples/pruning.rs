//! Grow a full CART tree, list its weakest-link pruning sequence and show
//! how leaf count and training accuracy fall as alpha grows.

use cardioforest::dataio::{generate_synthetic, SynthConfig};
use cardioforest::tree::{fit_classification_tree, prune_ccp, weakest_link_alphas, Tree, TreeParams};
use cardioforest::Matrix;

fn accuracy(t: &Tree, x: &Matrix, y: &[u8]) -> cardioforest::Result<f64> {
    let mut hits = 0;
    for (i, &label) in y.iter().enumerate() {
        let p = t.predict_proba(x.row(i))?;
        hits += usize::from(u8::from(p[1] > p[0]) == label);
    }
    Ok(hits as f64 / y.len() as f64)
}

fn main() -> cardioforest::Result<()> {
    let ds = generate_synthetic(&SynthConfig::calibrated(400, 0.3, 3))?;
    // qrs_end and qrs_onset only: the label is visible through their
    // difference, which axis-aligned splits can only approximate
    let x = ds.features.select_cols(&[3, 4]);
    let y = &ds.labels;
    let full = fit_classification_tree(&x, y, &vec![1.0; y.len()], &TreeParams::default())?;
    println!("unpruned: {} leaves, depth {}", full.n_leaves(), full.depth());

    let alphas = weakest_link_alphas(&full);
    println!("weakest-link alphas: {:?}", &alphas[..alphas.len().min(8)]);
    for alpha in [0.0, 0.001, 0.005, 0.01, 0.05] {
        let t = prune_ccp(&full, alpha);
        println!("alpha {alpha:<6} leaves {:>3}  train accuracy {:.4}", t.n_leaves(), accuracy(&t, &x, y)?);
    }
    Ok(())
}
