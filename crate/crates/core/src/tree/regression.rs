//! Second-order regression trees grown on gradient/hessian statistics.

use serde::{Deserialize, Serialize};

use super::binning::BinnedMatrix;
use super::classification::node_features;
use super::{midpoint, Node, NodeValue, Split, Tree};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// First and second derivatives of the loss per training row.
#[derive(Debug, Clone, PartialEq)]
pub struct GradHess {
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

impl GradHess {
    pub fn new(g: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if g.len() != h.len() {
            return Err(Error::Schema(format!("{} gradients but {} hessians", g.len(), h.len())));
        }
        if g.iter().any(|v| !v.is_finite()) || h.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::Value("gradients must be finite and hessians non-negative".into()));
        }
        Ok(Self { g, h })
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Fraction of the allowed features drawn at each node.
    pub max_features: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// L1 penalty on leaf weights.
    pub alpha_l1: f64,
    /// Minimum split score.
    pub gamma: f64,
    pub seed: u64,
}

impl Default for RegressionParams {
    fn default() -> Self {
        Self {
            max_depth: 6,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: 1.0,
            lambda: 1.0,
            alpha_l1: 0.0,
            gamma: 0.0,
            seed: 0,
        }
    }
}

impl RegressionParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf < 1 || self.min_samples_split < 2 {
            return Err(Error::Config("min_samples_leaf >= 1 and min_samples_split >= 2 required".into()));
        }
        if !(self.max_features > 0.0 && self.max_features <= 1.0) {
            return Err(Error::Config(format!("max_features {} outside (0, 1]", self.max_features)));
        }
        for (name, v) in [("lambda", self.lambda), ("alpha_l1", self.alpha_l1), ("gamma", self.gamma)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// `sign(g) * max(|g| - alpha, 0)`.
pub fn soft_threshold(g: f64, alpha: f64) -> f64 {
    g.signum() * (g.abs() - alpha).max(0.0)
}

/// Optimal leaf weight `-T(G) / (H + lambda)`; zero when the denominator is.
pub fn leaf_weight(g_sum: f64, h_sum: f64, lambda: f64, alpha: f64) -> f64 {
    let den = h_sum + lambda;
    if den > 0.0 {
        -soft_threshold(g_sum, alpha) / den
    } else {
        0.0
    }
}

fn score_term(g: f64, h: f64, lambda: f64, alpha: f64) -> f64 {
    let den = h + lambda;
    if den > 0.0 {
        let t = soft_threshold(g, alpha);
        t * t / den
    } else {
        0.0
    }
}

/// Column-major raw values with each column's sorted distinct values, used
/// by the exact split search.
#[derive(Debug, Clone)]
pub struct FeatureValues {
    columns: Vec<Vec<f64>>,
    distinct: Vec<Vec<f64>>,
}

impl FeatureValues {
    pub fn new(x: &Matrix) -> Result<Self> {
        if x.as_slice().iter().any(|v| v.is_nan()) {
            return Err(Error::Value("feature matrix contains NaN".into()));
        }
        let columns: Vec<Vec<f64>> = (0..x.n_cols()).map(|j| x.column(j)).collect();
        let distinct = columns
            .iter()
            .map(|c| {
                let mut d = c.clone();
                d.sort_by(f64::total_cmp);
                d.dedup();
                d
            })
            .collect();
        Ok(Self { columns, distinct })
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    /// Midpoint between `v` and the next larger training value of `feature`.
    fn threshold_after(&self, feature: usize, v: f64) -> f64 {
        let d = &self.distinct[feature];
        let pos = d.partition_point(|&u| u <= v);
        if pos < d.len() {
            midpoint(v, d[pos])
        } else {
            v
        }
    }
}

/// How candidate thresholds are enumerated.
#[derive(Debug, Clone, Copy)]
pub enum SplitSearch<'a> {
    /// Every boundary between distinct values present in the node.
    Exact(&'a FeatureValues),
    /// Bin boundaries of a histogram-binned matrix.
    Histogram(&'a BinnedMatrix),
}

impl SplitSearch<'_> {
    fn n_rows(&self) -> usize {
        match self {
            SplitSearch::Exact(v) => v.n_rows(),
            SplitSearch::Histogram(b) => b.n_rows(),
        }
    }

    fn n_cols(&self) -> usize {
        match self {
            SplitSearch::Exact(v) => v.n_cols(),
            SplitSearch::Histogram(b) => b.bin_indices.len(),
        }
    }
}

struct Best {
    feature: usize,
    threshold: f64,
    /// Exact: split value; histogram: last bin on the left.
    cut: f64,
    gain: f64,
}

struct NodeStats<'a> {
    gw: &'a [f64],
    hw: &'a [f64],
    g: f64,
    h: f64,
}

impl NodeStats<'_> {
    fn gain(&self, gl: f64, hl: f64, p: &RegressionParams) -> f64 {
        let (gr, hr) = (self.g - gl, self.h - hl);
        0.5 * (score_term(gl, hl, p.lambda, p.alpha_l1) + score_term(gr, hr, p.lambda, p.alpha_l1)
            - score_term(self.g, self.h, p.lambda, p.alpha_l1))
            - p.gamma
    }
}

fn scan_exact(
    vals: &FeatureValues,
    f: usize,
    rows: &[usize],
    st: &NodeStats,
    p: &RegressionParams,
    best: &mut Option<Best>,
) {
    let col = &vals.columns[f];
    let mut sorted = rows.to_vec();
    sorted.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
    let m = sorted.len();
    let (mut gl, mut hl) = (0.0, 0.0);
    let mut i = 0;
    while i < m {
        let v = col[sorted[i]];
        let (mut gs, mut hs) = (0.0, 0.0);
        while i < m && col[sorted[i]] == v {
            gs += st.gw[sorted[i]];
            hs += st.hw[sorted[i]];
            i += 1;
        }
        gl += gs;
        hl += hs;
        if i == m {
            break;
        }
        if i < p.min_samples_leaf || m - i < p.min_samples_leaf {
            continue;
        }
        let gain = st.gain(gl, hl, p);
        if best.as_ref().is_none_or(|b| gain > b.gain) {
            *best = Some(Best { feature: f, threshold: vals.threshold_after(f, v), cut: v, gain });
        }
    }
}

fn scan_histogram(
    bins: &BinnedMatrix,
    f: usize,
    rows: &[usize],
    st: &NodeStats,
    p: &RegressionParams,
    best: &mut Option<Best>,
) {
    let idx = &bins.bin_indices[f];
    let nb = bins.n_bins(f);
    let mut hg = vec![0.0; nb];
    let mut hh = vec![0.0; nb];
    let mut cnt = vec![0usize; nb];
    for &r in rows {
        let b = idx[r] as usize;
        hg[b] += st.gw[r];
        hh[b] += st.hw[r];
        cnt[b] += 1;
    }
    let m = rows.len();
    let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0usize);
    for b in 0..nb - 1 {
        if cnt[b] == 0 {
            continue;
        }
        gl += hg[b];
        hl += hh[b];
        nl += cnt[b];
        if nl == m {
            break;
        }
        if nl < p.min_samples_leaf || m - nl < p.min_samples_leaf {
            continue;
        }
        let gain = st.gain(gl, hl, p);
        if best.as_ref().is_none_or(|x| gain > x.gain) {
            *best = Some(Best {
                feature: f,
                threshold: bins.bin_upper_bounds[f][b],
                cut: b as f64,
                gain,
            });
        }
    }
}

/// Grow a regression tree on `rows` (ascending) restricted to `features`.
///
/// `weights`, when given, multiply each row's gradient and hessian and make
/// up node covers; otherwise every row weighs 1. Leaves hold the
/// regularized optimal weight.
pub fn fit_regression_tree(
    search: SplitSearch,
    gh: &GradHess,
    rows: &[usize],
    weights: Option<&[f64]>,
    features: &[usize],
    p: &RegressionParams,
) -> Result<Tree> {
    p.validate()?;
    let n = search.n_rows();
    if gh.len() != n || weights.is_some_and(|w| w.len() != n) {
        return Err(Error::Schema(format!("gradients do not match the {n} feature rows")));
    }
    if rows.is_empty() {
        return Err(Error::Fit("cannot fit a regression tree on zero rows".into()));
    }
    if rows.windows(2).any(|w| w[0] >= w[1]) || rows[rows.len() - 1] >= n {
        return Err(Error::Value("rows must be ascending and in range".into()));
    }
    if features.iter().any(|&f| f >= search.n_cols()) {
        return Err(Error::Value("feature index out of range".into()));
    }
    let unit = vec![1.0; n];
    let w = weights.unwrap_or(&unit);
    let gw: Vec<f64> = gh.g.iter().zip(w).map(|(g, w)| g * w).collect();
    let hw: Vec<f64> = gh.h.iter().zip(w).map(|(h, w)| h * w).collect();

    let mut nodes: Vec<Node> = Vec::new();
    let mut stack: Vec<(Vec<usize>, usize, Option<(usize, bool)>)> = vec![(rows.to_vec(), 0, None)];
    while let Some((node_rows, depth, parent)) = stack.pop() {
        let id = nodes.len();
        if let Some((pid, is_left)) = parent {
            let s = nodes[pid].split.as_mut().expect("parent is internal");
            if is_left {
                s.left = id;
            } else {
                s.right = id;
            }
        }
        let (mut g, mut h, mut cover) = (0.0, 0.0, 0.0);
        for &r in &node_rows {
            g += gw[r];
            h += hw[r];
            cover += w[r];
        }
        let m = node_rows.len();
        nodes.push(Node {
            split: None,
            value: NodeValue::Scalar(leaf_weight(g, h, p.lambda, p.alpha_l1)),
            cover,
            impurity: 0.0,
            n_samples: m,
        });
        if depth >= p.max_depth || m < p.min_samples_split || m < 2 * p.min_samples_leaf {
            continue;
        }
        let st = NodeStats { gw: &gw, hw: &hw, g, h };
        let mut best: Option<Best> = None;
        for f in node_features(features, p.max_features, p.seed, id) {
            match search {
                SplitSearch::Exact(v) => scan_exact(v, f, &node_rows, &st, p, &mut best),
                SplitSearch::Histogram(b) => scan_histogram(b, f, &node_rows, &st, p, &mut best),
            }
        }
        let Some(best) = best.filter(|b| b.gain > 0.0) else { continue };
        let (left, right): (Vec<usize>, Vec<usize>) = match search {
            SplitSearch::Exact(v) => {
                node_rows.iter().partition(|&&r| v.columns[best.feature][r] <= best.cut)
            }
            SplitSearch::Histogram(b) => {
                node_rows.iter().partition(|&&r| (b.bin_indices[best.feature][r] as f64) <= best.cut)
            }
        };
        nodes[id].split = Some(Split { feature: best.feature, threshold: best.threshold, left: 0, right: 0 });
        stack.push((right, depth + 1, Some((id, false))));
        stack.push((left, depth + 1, Some((id, true))));
    }
    Tree::from_nodes(nodes)
}
