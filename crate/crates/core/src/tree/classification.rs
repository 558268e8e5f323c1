//! Weighted-Gini CART for binary labels.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{midpoint, prune_ccp, Node, NodeValue, Split, Tree};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::rng_for;

/// Smallest impurity decrease that counts as a split.
pub const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until the other stopping rules apply.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Fraction of features considered at each node.
    pub max_features: f64,
    pub ccp_alpha: f64,
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: 1.0,
            ccp_alpha: 0.0,
            seed: 0,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf < 1 {
            return Err(Error::Config("min_samples_leaf must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::Config("min_samples_split must be at least 2".into()));
        }
        if !(self.max_features > 0.0 && self.max_features <= 1.0) {
            return Err(Error::Config(format!(
                "max_features {} outside (0, 1]",
                self.max_features
            )));
        }
        if !(self.ccp_alpha >= 0.0) {
            return Err(Error::Config(format!("ccp_alpha {} is negative", self.ccp_alpha)));
        }
        Ok(())
    }

    /// Features drawn per node out of `d`.
    pub fn features_per_node(&self, d: usize) -> usize {
        features_per_node(self.max_features, d)
    }
}

pub(crate) fn features_per_node(fraction: f64, d: usize) -> usize {
    ((fraction * d as f64 - 1e-9).ceil() as usize).clamp(1, d.max(1))
}

/// Sorted feature subset for one node, drawn from the node's own stream.
pub(crate) fn node_features(pool: &[usize], fraction: f64, seed: u64, node_id: usize) -> Vec<usize> {
    let k = features_per_node(fraction, pool.len());
    if k >= pool.len() {
        return pool.to_vec();
    }
    let mut rng = rng_for(seed, &[node_id as u64]);
    let mut picked: Vec<usize> = sample(&mut rng, pool.len(), k).into_iter().map(|i| pool[i]).collect();
    picked.sort_unstable();
    picked
}

/// Gini impurity of weighted class totals.
pub fn gini(counts: &[f64]) -> Result<f64> {
    let total: f64 = counts.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Value("gini of an empty node".into()));
    }
    Ok(1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    /// Weighted impurity decrease.
    pub gain: f64,
}

pub(crate) trait RowId: Copy {
    fn idx(self) -> usize;
}

impl RowId for u32 {
    fn idx(self) -> usize {
        self as usize
    }
}

impl RowId for usize {
    fn idx(self) -> usize {
        self
    }
}

fn sum_sq(c: &[f64; 2]) -> f64 {
    c[0] * c[0] + c[1] * c[1]
}

/// Best threshold on one feature given rows sorted by that feature.
/// `gain = G(parent) - (W_L/W) G(left) - (W_R/W) G(right)`.
fn scan_feature<I: RowId>(
    sorted: &[I],
    col: &[f64],
    y: &[u8],
    w: &[f64],
    totals: [f64; 2],
    min_leaf: usize,
) -> Option<(f64, f64)> {
    let m = sorted.len();
    let wt = totals[0] + totals[1];
    if m < 2 || !(wt > 0.0) {
        return None;
    }
    let parent = sum_sq(&totals) / wt;
    let mut left = [0.0f64; 2];
    let mut best: Option<(f64, f64)> = None;
    for i in 0..m - 1 {
        let r = sorted[i].idx();
        left[y[r] as usize] += w[r];
        let (a, b) = (col[r], col[sorted[i + 1].idx()]);
        if !(a < b) || i + 1 < min_leaf || m - i - 1 < min_leaf {
            continue;
        }
        let right = [totals[0] - left[0], totals[1] - left[1]];
        let (wl, wr) = (left[0] + left[1], right[0] + right[1]);
        let mut score = -parent;
        if wl > 0.0 {
            score += sum_sq(&left) / wl;
        }
        if wr > 0.0 {
            score += sum_sq(&right) / wr;
        }
        let gain = score / wt;
        if best.is_none_or(|(g, _)| gain > g) {
            best = Some((gain, midpoint(a, b)));
        }
    }
    best.filter(|&(g, _)| g > MIN_GAIN)
}

/// Best split of `rows` over `feature_subset`, or `None` when no candidate
/// has positive gain with both children holding `min_samples_leaf` rows.
pub fn best_split(
    rows: &[usize],
    x: &Matrix,
    y: &[u8],
    w: &[f64],
    feature_subset: &[usize],
    min_samples_leaf: usize,
) -> Option<SplitCandidate> {
    let mut totals = [0.0; 2];
    for &r in rows {
        totals[y[r] as usize] += w[r];
    }
    let mut best: Option<SplitCandidate> = None;
    for &f in feature_subset {
        let col = x.column(f);
        let mut sorted = rows.to_vec();
        sorted.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
        if let Some((gain, threshold)) = scan_feature(&sorted, &col, y, w, totals, min_samples_leaf) {
            if best.is_none_or(|b| gain > b.gain) {
                best = Some(SplitCandidate { feature: f, threshold, gain });
            }
        }
    }
    best
}

/// Column-major copy of a feature matrix with every column's row order
/// sorted by (value, row index). Shared by all trees of a forest.
#[derive(Debug, Clone)]
pub(crate) struct Presorted {
    columns: Vec<Vec<f64>>,
    order: Vec<Vec<u32>>,
}

impl Presorted {
    pub(crate) fn new(x: &Matrix) -> Self {
        let columns: Vec<Vec<f64>> = (0..x.n_cols()).map(|j| x.column(j)).collect();
        let order = columns
            .iter()
            .map(|col| {
                let mut o: Vec<u32> = (0..col.len() as u32).collect();
                o.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                o
            })
            .collect();
        Self { columns, order }
    }

    pub(crate) fn n_rows(&self) -> usize {
        self.order.first().map_or(0, Vec::len)
    }
}

/// Grow and prune a classification tree on rows with positive weight.
pub fn fit_classification_tree(x: &Matrix, y: &[u8], w: &[f64], p: &TreeParams) -> Result<Tree> {
    if x.n_rows() == 0 || x.n_cols() == 0 {
        return Err(Error::Fit("cannot fit a tree on empty data".into()));
    }
    if x.as_slice().iter().any(|v| v.is_nan()) {
        return Err(Error::Value("feature matrix contains NaN".into()));
    }
    fit_presorted(&Presorted::new(x), y, w, p)
}

pub(crate) fn fit_presorted(pre: &Presorted, y: &[u8], w: &[f64], p: &TreeParams) -> Result<Tree> {
    p.validate()?;
    let n = pre.n_rows();
    if y.len() != n || w.len() != n {
        return Err(Error::Schema(format!(
            "{n} rows but {} labels and {} weights",
            y.len(),
            w.len()
        )));
    }
    if let Some(i) = y.iter().position(|&v| v > 1) {
        return Err(Error::Value(format!("label {} at row {i} is not binary", y[i])));
    }
    if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::Value("sample weights must be finite and non-negative".into()));
    }
    let d = pre.columns.len();
    let mut work: Vec<Vec<u32>> = pre
        .order
        .iter()
        .map(|o| o.iter().copied().filter(|&r| w[r as usize] > 0.0).collect())
        .collect();
    let m = work[0].len();
    if m == 0 {
        return Err(Error::Fit("no samples with positive weight".into()));
    }
    let all_features: Vec<usize> = (0..d).collect();
    let mut goes_left = vec![false; n];
    let mut buf: Vec<u32> = Vec::with_capacity(m);
    let mut nodes: Vec<Node> = Vec::new();
    // (start, end, depth, parent slot)
    let mut stack: Vec<(usize, usize, usize, Option<(usize, bool)>)> = vec![(0, m, 0, None)];

    while let Some((start, end, depth, parent)) = stack.pop() {
        let id = nodes.len();
        if let Some((pid, is_left)) = parent {
            let s = nodes[pid].split.as_mut().expect("parent is internal");
            if is_left {
                s.left = id;
            } else {
                s.right = id;
            }
        }
        let mut totals = [0.0f64; 2];
        for &r in &work[0][start..end] {
            totals[y[r as usize] as usize] += w[r as usize];
        }
        let cover = totals[0] + totals[1];
        let impurity = gini(&totals)?;
        let count = end - start;
        nodes.push(Node {
            split: None,
            value: NodeValue::Classes(totals),
            cover,
            impurity,
            n_samples: count,
        });

        let can_split = p.max_depth.is_none_or(|md| depth < md)
            && count >= p.min_samples_split
            && count >= 2 * p.min_samples_leaf
            && impurity > 0.0;
        if !can_split {
            continue;
        }
        let subset = node_features(&all_features, p.max_features, p.seed, id);
        let mut best: Option<SplitCandidate> = None;
        for &f in &subset {
            let found = scan_feature(
                &work[f][start..end],
                &pre.columns[f],
                y,
                w,
                totals,
                p.min_samples_leaf,
            );
            if let Some((gain, threshold)) = found {
                if best.is_none_or(|b| gain > b.gain) {
                    best = Some(SplitCandidate { feature: f, threshold, gain });
                }
            }
        }
        let Some(best) = best else { continue };

        let col = &pre.columns[best.feature];
        for &r in &work[0][start..end] {
            goes_left[r as usize] = col[r as usize] <= best.threshold;
        }
        let mut n_left = 0;
        for seg in work.iter_mut() {
            let seg = &mut seg[start..end];
            buf.clear();
            let mut write = 0;
            for i in 0..seg.len() {
                let r = seg[i];
                if goes_left[r as usize] {
                    seg[write] = r;
                    write += 1;
                } else {
                    buf.push(r);
                }
            }
            seg[write..].copy_from_slice(&buf);
            n_left = write;
        }
        nodes[id].split = Some(Split { feature: best.feature, threshold: best.threshold, left: 0, right: 0 });
        let mid = start + n_left;
        stack.push((mid, end, depth + 1, Some((id, false))));
        stack.push((start, mid, depth + 1, Some((id, true))));
    }

    Ok(prune_ccp(&Tree::from_nodes(nodes)?, p.ccp_alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_hand_values() {
        assert_eq!(gini(&[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(gini(&[1.0, 1.0]).unwrap(), 0.5);
        assert!((gini(&[3.0, 1.0]).unwrap() - 0.375).abs() < 1e-15);
        assert!(matches!(gini(&[0.0, 0.0]), Err(Error::Value(_))));
    }

    #[test]
    fn best_split_two_points() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let s = best_split(&[0, 1], &x, &[0, 1], &[1.0, 1.0], &[0], 1).unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 0.5);
        assert!((s.gain - 0.5).abs() < 1e-15);
    }

    #[test]
    fn best_split_none_cases() {
        let x = Matrix::from_rows(&[vec![0.0, 5.0], vec![1.0, 5.0], vec![2.0, 5.0]]).unwrap();
        assert!(best_split(&[0, 1, 2], &x, &[1, 1, 1], &[1.0; 3], &[0, 1], 1).is_none());
        assert!(best_split(&[0, 1, 2], &x, &[0, 1, 0], &[1.0; 3], &[1], 1).is_none());
        // only split leaves a single row on one side
        assert!(best_split(&[0, 1], &x, &[0, 1, 0], &[1.0; 3], &[0], 2).is_none());
    }

    #[test]
    fn ties_prefer_lower_feature() {
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let s = best_split(&[0, 1], &x, &[0, 1], &[1.0, 1.0], &[0, 1], 1).unwrap();
        assert_eq!(s.feature, 0);
    }

    #[test]
    fn separable_data_is_fit_exactly() {
        let x = Matrix::from_rows(&(0..10).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap();
        let y: Vec<u8> = (0..10).map(|i| u8::from(i >= 6)).collect();
        let t = fit_classification_tree(&x, &y, &[1.0; 10], &TreeParams { max_depth: Some(2), ..Default::default() })
            .unwrap();
        assert_eq!(t.n_leaves(), 2);
        assert_eq!(t.root().split.unwrap().threshold, 5.5);
        for (i, &yi) in y.iter().enumerate() {
            let p = t.predict_proba(&[i as f64]).unwrap();
            assert_eq!(u8::from(p[1] > 0.5), yi);
        }
    }

    #[test]
    fn min_samples_split_forces_leaf() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let p = TreeParams { min_samples_split: 5, ..Default::default() };
        let t = fit_classification_tree(&x, &[0, 0, 1, 1], &[1.0; 4], &p).unwrap();
        assert_eq!(t.n_nodes(), 1);
    }

    #[test]
    fn zero_weight_rows_are_ignored() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let t = fit_classification_tree(&x, &[0, 1, 1], &[1.0, 0.0, 1.0], &TreeParams::default()).unwrap();
        assert_eq!(t.root().n_samples, 2);
        assert_eq!(t.root().split.unwrap().threshold, 1.0);
    }

    #[test]
    fn empty_and_invalid_inputs() {
        assert!(matches!(
            fit_classification_tree(&Matrix::zeros(0, 2), &[], &[], &TreeParams::default()),
            Err(Error::Fit(_))
        ));
        let x = Matrix::from_rows(&[vec![0.0]]).unwrap();
        assert!(matches!(
            fit_classification_tree(&x, &[0], &[0.0], &TreeParams::default()),
            Err(Error::Fit(_))
        ));
        let bad = TreeParams { max_features: 0.0, ..Default::default() };
        assert!(matches!(fit_classification_tree(&x, &[0], &[1.0], &bad), Err(Error::Config(_))));
    }

    #[test]
    fn features_per_node_rounds_up() {
        assert_eq!(features_per_node(0.6, 10), 6);
        assert_eq!(features_per_node(0.1, 10), 1);
        assert_eq!(features_per_node(0.3, 10), 3);
        assert_eq!(features_per_node(0.25, 10), 3);
        assert_eq!(features_per_node(1.0, 10), 10);
        assert_eq!(features_per_node(0.01, 10), 1);
    }
}
