//! Minimal cost-complexity (weakest-link) pruning.
//!
//! The risk of a node is its weighted misclassification rate relative to the
//! root: `(cover - max class weight) / root cover`.

use super::{NodeValue, Tree};

fn leaf_risk(value: &NodeValue, root_cover: f64) -> f64 {
    match *value {
        NodeValue::Classes([a, b]) => (a + b - a.max(b)) / root_cover,
        NodeValue::Scalar(_) => 0.0,
    }
}

struct Pruner {
    parent: Vec<Option<usize>>,
    r_leaf: Vec<f64>,
    r_sub: Vec<f64>,
    leaves: Vec<usize>,
    collapsed: Vec<bool>,
    internal: Vec<bool>,
}

impl Pruner {
    fn new(t: &Tree) -> Self {
        let nodes = t.nodes();
        let n = nodes.len();
        let root_cover = match nodes[0].value {
            NodeValue::Classes([a, b]) => a + b,
            NodeValue::Scalar(_) => 1.0,
        };
        let root_cover = if root_cover > 0.0 { root_cover } else { 1.0 };
        let mut parent = vec![None; n];
        let r_leaf: Vec<f64> = nodes.iter().map(|nd| leaf_risk(&nd.value, root_cover)).collect();
        let mut r_sub = r_leaf.clone();
        let mut leaves = vec![1usize; n];
        // children have larger ids, so a reverse sweep sees them first
        for id in (0..n).rev() {
            if let Some(s) = nodes[id].split {
                parent[s.left] = Some(id);
                parent[s.right] = Some(id);
                r_sub[id] = r_sub[s.left] + r_sub[s.right];
                leaves[id] = leaves[s.left] + leaves[s.right];
            }
        }
        let internal = nodes.iter().map(|nd| !nd.is_leaf()).collect();
        Self { parent, r_leaf, r_sub, leaves, collapsed: vec![false; n], internal }
    }

    fn active(&self, id: usize) -> bool {
        if !self.internal[id] || self.collapsed[id] {
            return false;
        }
        let mut a = self.parent[id];
        while let Some(p) = a {
            if self.collapsed[p] {
                return false;
            }
            a = self.parent[p];
        }
        true
    }

    /// Active internal node with the smallest effective alpha; lowest id on ties.
    fn weakest(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for id in 0..self.r_leaf.len() {
            if !self.active(id) {
                continue;
            }
            let g = (self.r_leaf[id] - self.r_sub[id]) / (self.leaves[id] - 1) as f64;
            if best.is_none_or(|(_, bg)| g < bg) {
                best = Some((id, g));
            }
        }
        best
    }

    fn collapse(&mut self, id: usize) {
        let dr = self.r_sub[id] - self.r_leaf[id];
        let dl = self.leaves[id] - 1;
        self.collapsed[id] = true;
        self.r_sub[id] = self.r_leaf[id];
        self.leaves[id] = 1;
        let mut a = self.parent[id];
        while let Some(p) = a {
            self.r_sub[p] -= dr;
            self.leaves[p] -= dl;
            a = self.parent[p];
        }
    }
}

/// Prune `t` to the subtree minimizing `R(T) + alpha * |leaves(T)|`.
///
/// `alpha == 0` returns the tree unchanged. Regression trees carry no
/// misclassification risk and are returned unchanged.
pub fn prune_ccp(t: &Tree, alpha: f64) -> Tree {
    if !(alpha > 0.0) || !matches!(t.root().value, NodeValue::Classes(_)) {
        return t.clone();
    }
    let mut pr = Pruner::new(t);
    while let Some((id, g)) = pr.weakest() {
        if g > alpha {
            break;
        }
        pr.collapse(id);
    }
    if !pr.collapsed.iter().any(|&c| c) {
        return t.clone();
    }
    t.compact(|id| pr.collapsed[id])
}

/// Effective alphas at which successive weakest links are collapsed,
/// starting from the full tree down to the root leaf. Non-decreasing.
pub fn weakest_link_alphas(t: &Tree) -> Vec<f64> {
    let mut pr = Pruner::new(t);
    let mut out = Vec::new();
    let mut last = f64::NEG_INFINITY;
    while let Some((id, g)) = pr.weakest() {
        last = last.max(g);
        out.push(last);
        pr.collapse(id);
    }
    out
}
