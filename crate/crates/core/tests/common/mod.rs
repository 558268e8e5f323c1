//! Brute-force oracles and random fixtures shared by the integration tests.

#![allow(dead_code)]

use cardioforest::tree::{Node, NodeValue, Split, Tree};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Leaf values of a random tree.
#[derive(Clone, Copy)]
pub enum LeafKind {
    /// Integer class weights, at least one of them positive.
    Classes,
    /// Uniform outputs in [-1, 1] with integer covers.
    Scalar,
}

/// Random tree with exactly `leaves` leaves, splitting on features below
/// `d`. Internal class weights and covers are the sums of their children.
pub fn random_tree(r: &mut ChaCha8Rng, leaves: usize, d: usize, kind: LeafKind) -> Tree {
    let mut nodes = Vec::new();
    grow(r, leaves, d, kind, &mut nodes);
    Tree::from_nodes(nodes).expect("generated tree is valid")
}

fn grow(r: &mut ChaCha8Rng, leaves: usize, d: usize, kind: LeafKind, nodes: &mut Vec<Node>) -> usize {
    let id = nodes.len();
    nodes.push(Node { split: None, value: NodeValue::Scalar(0.0), cover: 0.0, impurity: 0.0, n_samples: 0 });
    if leaves == 1 {
        let (value, cover) = match kind {
            LeafKind::Classes => {
                let a = r.random_range(0..10) as f64;
                let b = r.random_range(if a == 0.0 { 1 } else { 0 }..10) as f64;
                (NodeValue::Classes([a, b]), a + b)
            }
            LeafKind::Scalar => (NodeValue::Scalar(r.random_range(-1.0..1.0)), r.random_range(1..20) as f64),
        };
        nodes[id] = Node { split: None, value, cover, impurity: 0.0, n_samples: cover as usize };
        return id;
    }
    let left_leaves = r.random_range(1..leaves);
    let left = grow(r, left_leaves, d, kind, nodes);
    let right = grow(r, leaves - left_leaves, d, kind, nodes);
    let (l, rt) = (&nodes[left], &nodes[right]);
    let value = match (l.value, rt.value) {
        (NodeValue::Classes(a), NodeValue::Classes(b)) => NodeValue::Classes([a[0] + b[0], a[1] + b[1]]),
        _ => NodeValue::Scalar(r.random_range(-1.0..1.0)),
    };
    let cover = l.cover + rt.cover;
    let n_samples = l.n_samples + rt.n_samples;
    let split = Split { feature: r.random_range(0..d), threshold: r.random_range(-1.0..1.0), left, right };
    nodes[id] = Node { split: Some(split), value, cover, impurity: 0.0, n_samples };
    id
}

/// Misclassification risk of a classification node relative to `root_cover`.
pub fn node_risk(v: &NodeValue, root_cover: f64) -> f64 {
    match *v {
        NodeValue::Classes([a, b]) => a.min(b) / root_cover,
        NodeValue::Scalar(_) => 0.0,
    }
}

/// `(risk, leaves)` of every pruned subtree rooted at `id`.
pub fn pruned_subtrees(t: &Tree, id: usize, root_cover: f64) -> Vec<(f64, usize)> {
    let node = &t.nodes()[id];
    let mut out = vec![(node_risk(&node.value, root_cover), 1)];
    if let Some(s) = node.split {
        let left = pruned_subtrees(t, s.left, root_cover);
        let right = pruned_subtrees(t, s.right, root_cover);
        for a in &left {
            for b in &right {
                out.push((a.0 + b.0, a.1 + b.1));
            }
        }
    }
    out
}

/// `R(T) + alpha * |leaves(T)|` of a whole tree.
pub fn ccp_cost(t: &Tree, alpha: f64, root_cover: f64) -> f64 {
    let risk: f64 = t.nodes().iter().filter(|n| n.is_leaf()).map(|n| node_risk(&n.value, root_cover)).sum();
    risk + alpha * t.n_leaves() as f64
}

/// Minimum cost-complexity over every pruned subtree, by enumeration.
pub fn min_ccp_cost(t: &Tree, alpha: f64) -> f64 {
    let root_cover = t.root().cover;
    pruned_subtrees(t, 0, root_cover)
        .into_iter()
        .map(|(r, l)| r + alpha * l as f64)
        .fold(f64::INFINITY, f64::min)
}

/// Expected output when only the features in `mask` are known: unknown
/// splits average both children weighted by cover.
pub fn conditional_expectation(t: &Tree, x: &[f64], mask: u32) -> f64 {
    fn walk(t: &Tree, id: usize, x: &[f64], mask: u32) -> f64 {
        let n = &t.nodes()[id];
        match n.split {
            None => n.value.output(),
            Some(s) if mask & (1 << s.feature) != 0 => {
                walk(t, if x[s.feature] <= s.threshold { s.left } else { s.right }, x, mask)
            }
            Some(s) => {
                let (l, r) = (&t.nodes()[s.left], &t.nodes()[s.right]);
                (l.cover * walk(t, s.left, x, mask) + r.cover * walk(t, s.right, x, mask)) / n.cover
            }
        }
    }
    walk(t, 0, x, mask)
}

/// Exact Shapley values over all `2^d` feature coalitions.
pub fn brute_force_shapley(t: &Tree, x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let values: Vec<f64> = (0..1u32 << d).map(|m| conditional_expectation(t, x, m)).collect();
    let fact: Vec<f64> = (0..=d).scan(1.0, |acc, k| {
        let out = *acc;
        *acc *= (k + 1) as f64;
        Some(out)
    }).collect();
    (0..d)
        .map(|i| {
            let bit = 1u32 << i;
            let mut phi = 0.0;
            for m in (0..1u32 << d).filter(|m| m & bit == 0) {
                let s = m.count_ones() as usize;
                let w = fact[s] * fact[d - s - 1] / fact[d];
                phi += w * (values[(m | bit) as usize] - values[m as usize]);
            }
            phi
        })
        .collect()
}

/// Pairwise ROC AUC: the share of (positive, negative) pairs ordered
/// correctly, ties counting one half.
pub fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for (i, &li) in labels.iter().enumerate() {
        if li != 1 {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj != 0 {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                num += 1.0;
            } else if scores[i] == scores[j] {
                num += 0.5;
            }
        }
    }
    num / pairs
}
