//! Bagged, cost-complexity pruned CART forest.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, rng_for};
use crate::tree::{fit_presorted, NodeValue, Presorted, Tree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeight {
    Balanced,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub tree: TreeParams,
    pub class_weight: ClassWeight,
    pub bootstrap: bool,
    pub oob_score: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    /// The tuned CardioForest configuration.
    fn default() -> Self {
        Self {
            n_estimators: 1000,
            tree: TreeParams {
                max_depth: Some(20),
                min_samples_split: 5,
                min_samples_leaf: 2,
                max_features: 0.6,
                ccp_alpha: 0.01,
                seed: 42,
            },
            class_weight: ClassWeight::Balanced,
            bootstrap: true,
            oob_score: true,
            seed: 42,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators < 1 {
            return Err(Error::Config("n_estimators must be at least 1".into()));
        }
        self.tree.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub class_weights: [f64; 2],
    pub oob_score: Option<f64>,
    pub params: ForestParams,
    pub n_features: usize,
}

/// `n` uniform draws with replacement from `0..n`.
pub fn bootstrap_sample(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_for(seed, &[]);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Indices never drawn by a bootstrap sample.
pub fn out_of_bag(n: usize, drawn: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; n];
    for &i in drawn {
        seen[i] = true;
    }
    (0..n).filter(|&i| !seen[i]).collect()
}

pub(crate) fn class_counts(y: &[u8]) -> Result<[usize; 2]> {
    let mut c = [0usize; 2];
    for (i, &v) in y.iter().enumerate() {
        if v > 1 {
            return Err(Error::Value(format!("label {v} at row {i} is not binary")));
        }
        c[v as usize] += 1;
    }
    Ok(c)
}

/// `w_k = n / (2 n_k)`.
pub fn balanced_class_weights(y: &[u8]) -> Result<[f64; 2]> {
    let c = class_counts(y)?;
    if c[0] == 0 || c[1] == 0 {
        return Err(Error::Fit("balanced class weights need both classes".into()));
    }
    let n = y.len() as f64;
    Ok([n / (2.0 * c[0] as f64), n / (2.0 * c[1] as f64)])
}

/// Class voted by a classification leaf; ties go to class 0.
fn leaf_vote(v: &NodeValue) -> u8 {
    match *v {
        NodeValue::Classes([w0, w1]) => u8::from(w1 > w0),
        NodeValue::Scalar(s) => u8::from(s > 0.5),
    }
}

pub fn fit_cardioforest(x: &Matrix, y: &[u8], p: &ForestParams) -> Result<ForestModel> {
    p.validate()?;
    let n = x.n_rows();
    if n == 0 || x.n_cols() == 0 {
        return Err(Error::Fit("cannot fit a forest on empty data".into()));
    }
    if y.len() != n {
        return Err(Error::Schema(format!("{n} rows but {} labels", y.len())));
    }
    if x.as_slice().iter().any(|v| v.is_nan()) {
        return Err(Error::Value("feature matrix contains NaN".into()));
    }
    let counts = class_counts(y)?;
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::Fit("training labels contain a single class".into()));
    }
    let class_weights = match p.class_weight {
        ClassWeight::Balanced => balanced_class_weights(y)?,
        ClassWeight::None => [1.0, 1.0],
    };
    let pre = Presorted::new(x);

    let fitted: Vec<(Tree, Vec<u8>)> = (0..p.n_estimators)
        .into_par_iter()
        .map(|t| {
            let tree_seed = derive_seed(p.seed, &[t as u64]);
            let mut mult = vec![0u32; n];
            if p.bootstrap {
                for i in bootstrap_sample(n, tree_seed) {
                    mult[i] += 1;
                }
            } else {
                mult.fill(1);
            }
            let w: Vec<f64> =
                mult.iter().zip(y).map(|(&m, &yi)| m as f64 * class_weights[yi as usize]).collect();
            let tp = TreeParams { seed: tree_seed, ..p.tree.clone() };
            let tree = fit_presorted(&pre, y, &w, &tp)?;
            // 0/1 = out-of-bag vote, 2 = in bag
            let mut votes = vec![2u8; n];
            if p.bootstrap && p.oob_score {
                for i in (0..n).filter(|&i| mult[i] == 0) {
                    votes[i] = leaf_vote(&tree.predict_value(x.row(i))?);
                }
            }
            Ok((tree, votes))
        })
        .collect::<Result<_>>()?;

    let oob_score = if p.bootstrap && p.oob_score {
        let mut tally = vec![[0u32; 2]; n];
        for (_, votes) in &fitted {
            for (i, &v) in votes.iter().enumerate() {
                if v < 2 {
                    tally[i][v as usize] += 1;
                }
            }
        }
        let (mut hit, mut seen) = (0usize, 0usize);
        for (i, t) in tally.iter().enumerate() {
            if t[0] + t[1] > 0 {
                seen += 1;
                hit += usize::from(u8::from(t[1] > t[0]) == y[i]);
            }
        }
        if seen == 0 {
            log::warn!("no sample was out of bag; OOB score unavailable");
            None
        } else {
            Some(hit as f64 / seen as f64)
        }
    } else {
        None
    };

    Ok(ForestModel {
        trees: fitted.into_iter().map(|(t, _)| t).collect(),
        class_weights,
        oob_score,
        params: p.clone(),
        n_features: x.n_cols(),
    })
}

impl ForestModel {
    /// Per-tree votes and the mean positive-class leaf probability of one row.
    fn row_outputs(&self, row: &[f64]) -> Result<(u8, f64)> {
        let mut ones = 0usize;
        let mut p_sum = 0.0;
        for t in &self.trees {
            let v = t.predict_value(row)?;
            ones += leaf_vote(&v) as usize;
            p_sum += v.output();
        }
        let label = u8::from(ones > self.trees.len() - ones);
        Ok((label, p_sum / self.trees.len() as f64))
    }
}

/// Majority-vote labels (ties go to class 0) and mean leaf probabilities.
pub fn predict_forest(m: &ForestModel, x: &Matrix) -> Result<(Vec<u8>, Vec<f64>)> {
    if x.n_cols() != m.n_features {
        return Err(Error::Schema(format!(
            "model expects {} features, got {}",
            m.n_features,
            x.n_cols()
        )));
    }
    let out: Vec<(u8, f64)> =
        (0..x.n_rows()).into_par_iter().map(|i| m.row_outputs(x.row(i))).collect::<Result<_>>()?;
    Ok(out.into_iter().unzip())
}
