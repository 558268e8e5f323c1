//! Exact path-dependent TreeSHAP.
//!
//! Follows the polynomial-time recursion that tracks, for every feature on
//! the current root-to-node path, the fraction of cover flowing down the
//! path when the feature is unknown (`zero`) or known (`one`), together with
//! the permutation weights of all subset sizes.

use crate::error::{Error, Result};
use crate::tree::Tree;

#[derive(Debug, Clone, Copy)]
struct PathElement {
    feature: Option<usize>,
    zero: f64,
    one: f64,
    weight: f64,
}

fn extend(path: &mut Vec<PathElement>, zero: f64, one: f64, feature: Option<usize>) {
    let depth = path.len();
    path.push(PathElement { feature, zero, one, weight: if depth == 0 { 1.0 } else { 0.0 } });
    let denom = (depth + 1) as f64;
    for i in (0..depth).rev() {
        path[i + 1].weight += one * path[i].weight * (i + 1) as f64 / denom;
        path[i].weight = zero * path[i].weight * (depth - i) as f64 / denom;
    }
}

fn unwind(path: &mut Vec<PathElement>, index: usize) {
    let depth = path.len() - 1;
    let PathElement { one, zero, .. } = path[index];
    let denom = (depth + 1) as f64;
    let mut next = path[depth].weight;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = path[i].weight;
            path[i].weight = next * denom / ((i + 1) as f64 * one);
            next = tmp - path[i].weight * zero * (depth - i) as f64 / denom;
        } else {
            path[i].weight = path[i].weight * denom / (zero * (depth - i) as f64);
        }
    }
    for i in index..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero = path[i + 1].zero;
        path[i].one = path[i + 1].one;
    }
    path.pop();
}

/// Total permutation weight of the path with element `index` removed.
fn unwound_sum(path: &[PathElement], index: usize) -> f64 {
    let depth = path.len() - 1;
    let PathElement { one, zero, .. } = path[index];
    let denom = (depth + 1) as f64;
    let mut next = path[depth].weight;
    let mut total = 0.0;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = next * denom / ((i + 1) as f64 * one);
            total += tmp;
            next = path[i].weight - tmp * zero * (depth - i) as f64 / denom;
        } else if zero != 0.0 {
            total += path[i].weight / zero / ((depth - i) as f64 / denom);
        }
    }
    total
}

struct Walker<'a> {
    tree: &'a Tree,
    x: &'a [f64],
    phi: Vec<f64>,
}

impl Walker<'_> {
    fn recurse(&mut self, node: usize, mut path: Vec<PathElement>, zero: f64, one: f64, feature: Option<usize>) {
        extend(&mut path, zero, one, feature);
        let tree = self.tree;
        let nodes = tree.nodes();
        let nd = &nodes[node];
        let Some(s) = nd.split else {
            let v = nd.value.output();
            for i in 1..path.len() {
                let el = path[i];
                let w = unwound_sum(&path, i);
                if let Some(f) = el.feature {
                    self.phi[f] += w * (el.one - el.zero) * v;
                }
            }
            return;
        };
        let (hot, cold) =
            if self.x[s.feature] <= s.threshold { (s.left, s.right) } else { (s.right, s.left) };
        let hot_zero = nodes[hot].cover / nd.cover;
        let cold_zero = nodes[cold].cover / nd.cover;
        let (mut in_zero, mut in_one) = (1.0, 1.0);
        if let Some(k) = path.iter().position(|e| e.feature == Some(s.feature)) {
            in_zero = path[k].zero;
            in_one = path[k].one;
            unwind(&mut path, k);
        }
        self.recurse(hot, path.clone(), hot_zero * in_zero, in_one, Some(s.feature));
        self.recurse(cold, path, cold_zero * in_zero, 0.0, Some(s.feature));
    }
}

/// Cover-weighted mean leaf output: the expected prediction when no
/// feature is known.
pub fn expected_value(t: &Tree) -> Result<f64> {
    let nodes = t.nodes();
    if !(nodes[0].cover > 0.0) {
        return Err(Error::Value("tree root has zero cover".into()));
    }
    let mut e = vec![0.0; nodes.len()];
    for id in (0..nodes.len()).rev() {
        e[id] = match nodes[id].split {
            None => nodes[id].value.output(),
            Some(s) => {
                (nodes[s.left].cover * e[s.left] + nodes[s.right].cover * e[s.right]) / nodes[id].cover
            }
        };
    }
    Ok(e[0])
}

/// Shapley values of `x` for a single tree and the tree's expected value.
/// Leaves contribute their positive-class probability (classification) or
/// raw output (regression).
pub fn tree_shap(t: &Tree, x: &[f64]) -> Result<(Vec<f64>, f64)> {
    let base = expected_value(t)?;
    if let Some(&f) = t.split_features().last() {
        if f >= x.len() {
            return Err(Error::Schema(format!("tree uses feature {f}, sample has {}", x.len())));
        }
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::Value("sample contains NaN".into()));
    }
    if t.nodes().iter().any(|n| !(n.cover > 0.0)) {
        return Err(Error::Value("tree has a node with zero cover".into()));
    }
    let mut w = Walker { tree: t, x, phi: vec![0.0; x.len()] };
    w.recurse(0, Vec::with_capacity(t.depth() + 2), 1.0, 1.0, None);
    Ok((w.phi, base))
}
