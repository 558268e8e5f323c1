use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Pearson correlation; `None` when either column has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Greedy scan in column order: column j is dropped when |r(j, i)| reaches
/// `threshold` for some already kept column i. Zero-variance columns
/// correlate with nothing and are always kept.
pub fn correlation_prune(x: &Matrix, threshold: f64) -> Result<Vec<usize>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Config(format!("correlation threshold {threshold} outside (0, 1]")));
    }
    if x.n_rows() < 2 {
        return Err(Error::Fit("correlation pruning needs at least two rows".into()));
    }
    let cols: Vec<Vec<f64>> = (0..x.n_cols()).map(|j| x.column(j)).collect();
    let mut kept: Vec<usize> = Vec::new();
    for j in 0..cols.len() {
        let drop = kept
            .iter()
            .any(|&i| pearson(&cols[i], &cols[j]).is_some_and(|r| r.abs() >= threshold));
        if drop {
            log::debug!("correlation prune drops column {j}");
        } else {
            if pearson(&cols[j], &cols[j]).is_none() {
                log::debug!("column {j} has zero variance");
            }
            kept.push(j);
        }
    }
    Ok(kept)
}
