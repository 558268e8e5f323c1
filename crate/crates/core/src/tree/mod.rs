//! Binary decision trees stored as flat node arenas.
//!
//! Classification nodes carry weighted class totals, regression nodes a
//! scalar output. Every node, internal or leaf, keeps its value, its cover
//! (sum of sample weights) and its sample count, so a subtree can be turned
//! into a leaf without revisiting the data.

mod binning;
mod classification;
mod prune;
mod regression;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use binning::{build_histograms, BinnedMatrix};
pub use classification::{
    best_split, fit_classification_tree, gini, SplitCandidate, TreeParams, MIN_GAIN,
};
pub(crate) use classification::{fit_presorted, node_features, Presorted};
pub use prune::{prune_ccp, weakest_link_alphas};
pub use regression::{
    fit_regression_tree, leaf_weight, soft_threshold, FeatureValues, GradHess, RegressionParams,
    SplitSearch,
};

/// Split threshold between adjacent distinct values `a < b`. Falls back to
/// `a` when the midpoint rounds up to `b`.
pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) * 0.5;
    if m < b && m.is_finite() {
        m
    } else {
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeValue {
    Scalar(f64),
    Classes([f64; 2]),
}

impl NodeValue {
    /// Positive-class probability for classification nodes, the raw output
    /// for regression nodes.
    pub fn output(&self) -> f64 {
        match *self {
            NodeValue::Scalar(v) => v,
            NodeValue::Classes([w0, w1]) => {
                let t = w0 + w1;
                if t > 0.0 {
                    w1 / t
                } else {
                    0.5
                }
            }
        }
    }

    pub fn probabilities(&self) -> [f64; 2] {
        let p1 = self.output();
        [1.0 - p1, p1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub split: Option<Split>,
    pub value: NodeValue,
    pub cover: f64,
    pub impurity: f64,
    pub n_samples: usize,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }
}

/// Flat node arena; node 0 is the root and children always have larger ids
/// than their parent.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: NodeValue, cover: f64, n_samples: usize) -> Self {
        let impurity = match value {
            NodeValue::Classes(c) => gini(&c).unwrap_or(0.0),
            NodeValue::Scalar(_) => 0.0,
        };
        Self { nodes: vec![Node { split: None, value, cover, impurity, n_samples }] }
    }

    /// Validate and wrap a node arena.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Schema("tree has no nodes".into()));
        }
        let mut parents = vec![0usize; nodes.len()];
        for (id, n) in nodes.iter().enumerate() {
            if let Some(s) = n.split {
                for c in [s.left, s.right] {
                    if c <= id || c >= nodes.len() {
                        return Err(Error::Schema(format!("node {id} has invalid child {c}")));
                    }
                    parents[c] += 1;
                }
                if !s.threshold.is_finite() {
                    return Err(Error::Schema(format!("node {id} has non-finite threshold")));
                }
            }
            if let NodeValue::Classes(c) = n.value {
                if c.iter().any(|&w| !(w >= 0.0)) {
                    return Err(Error::Schema(format!("node {id} has negative class weight")));
                }
            }
        }
        if parents[0] != 0 || parents[1..].iter().any(|&p| p != 1) {
            return Err(Error::Schema("every non-root node needs exactly one parent".into()));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        let mut max = 0;
        for (id, n) in self.nodes.iter().enumerate() {
            if let Some(s) = n.split {
                depth[s.left] = depth[id] + 1;
                depth[s.right] = depth[id] + 1;
                max = max.max(depth[id] + 1);
            }
        }
        max
    }

    /// Features used by any split.
    pub fn split_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> =
            self.nodes.iter().filter_map(|n| n.split.map(|s| s.feature)).collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    /// Leaf id reached by `x`; `x[feature] <= threshold` goes left.
    pub fn leaf_index(&self, x: &[f64]) -> Result<usize> {
        let mut id = 0;
        while let Some(s) = self.nodes[id].split {
            let v = *x.get(s.feature).ok_or_else(|| {
                Error::Schema(format!("sample has {} features, split uses {}", x.len(), s.feature))
            })?;
            if v.is_nan() {
                return Err(Error::Value(format!("feature {} is NaN", s.feature)));
            }
            id = if v <= s.threshold { s.left } else { s.right };
        }
        Ok(id)
    }

    pub fn predict_value(&self, x: &[f64]) -> Result<NodeValue> {
        Ok(self.nodes[self.leaf_index(x)?].value)
    }

    /// Normalized class weights of the reached leaf.
    pub fn predict_proba(&self, x: &[f64]) -> Result<[f64; 2]> {
        Ok(self.predict_value(x)?.probabilities())
    }

    pub fn predict_scalar(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict_value(x)?.output())
    }

    pub(crate) fn set_value(&mut self, id: usize, value: NodeValue) {
        self.nodes[id].value = value;
    }

    /// Keep only nodes reachable from the root, renumbered in preorder.
    pub(crate) fn compact(&self, is_leaf: impl Fn(usize) -> bool) -> Tree {
        let mut out: Vec<Node> = Vec::new();
        // (old id, slot in parent to patch)
        let mut stack = vec![(0usize, None::<(usize, bool)>)];
        while let Some((old, parent)) = stack.pop() {
            let new_id = out.len();
            if let Some((p, left)) = parent {
                let s = out[p].split.as_mut().expect("parent is internal");
                if left {
                    s.left = new_id;
                } else {
                    s.right = new_id;
                }
            }
            let mut node = self.nodes[old].clone();
            match node.split {
                Some(s) if !is_leaf(old) => {
                    stack.push((s.right, Some((new_id, false))));
                    stack.push((s.left, Some((new_id, true))));
                }
                _ => node.split = None,
            }
            out.push(node);
        }
        Tree { nodes: out }
    }
}

/// Flat serialized form of one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NodeRecord {
    id: usize,
    feature: Option<usize>,
    threshold: Option<f64>,
    left: Option<usize>,
    right: Option<usize>,
    value: NodeValue,
    cover: f64,
    n_samples: usize,
}

impl Serialize for Tree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let records: Vec<NodeRecord> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| NodeRecord {
                id,
                feature: n.split.map(|s| s.feature),
                threshold: n.split.map(|s| s.threshold),
                left: n.split.map(|s| s.left),
                right: n.split.map(|s| s.right),
                value: n.value,
                cover: n.cover,
                n_samples: n.n_samples,
            })
            .collect();
        serde::Serialize::serialize(&serde_json::json!({ "nodes": records }), s)
    }
}

impl<'de> Deserialize<'de> for Tree {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            nodes: Vec<NodeRecord>,
        }
        let raw = Raw::deserialize(d)?;
        let mut nodes = Vec::with_capacity(raw.nodes.len());
        for (i, r) in raw.nodes.into_iter().enumerate() {
            if r.id != i {
                return Err(serde::de::Error::custom(format!("node id {} at position {i}", r.id)));
            }
            let split = match (r.feature, r.threshold, r.left, r.right) {
                (Some(feature), Some(threshold), Some(left), Some(right)) => {
                    Some(Split { feature, threshold, left, right })
                }
                (None, None, None, None) => None,
                _ => return Err(serde::de::Error::custom(format!("node {i} has a partial split"))),
            };
            let impurity = match r.value {
                NodeValue::Classes(c) => gini(&c).unwrap_or(0.0),
                NodeValue::Scalar(_) => 0.0,
            };
            nodes.push(Node { split, value: r.value, cover: r.cover, impurity, n_samples: r.n_samples });
        }
        Tree::from_nodes(nodes).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn stump(threshold: f64, left: NodeValue, right: NodeValue) -> Tree {
        let cover = |v: &NodeValue| match v {
            NodeValue::Classes(c) => c[0] + c[1],
            NodeValue::Scalar(_) => 1.0,
        };
        let (cl, cr) = (cover(&left), cover(&right));
        let root_value = match (left, right) {
            (NodeValue::Classes(a), NodeValue::Classes(b)) => NodeValue::Classes([a[0] + b[0], a[1] + b[1]]),
            _ => NodeValue::Scalar(0.0),
        };
        Tree::from_nodes(vec![
            Node {
                split: Some(Split { feature: 0, threshold, left: 1, right: 2 }),
                value: root_value,
                cover: cl + cr,
                impurity: 0.0,
                n_samples: 2,
            },
            Node { split: None, value: left, cover: cl, impurity: 0.0, n_samples: 1 },
            Node { split: None, value: right, cover: cr, impurity: 0.0, n_samples: 1 },
        ])
        .unwrap()
    }

    #[test]
    fn single_leaf_probabilities() {
        let t = Tree::leaf(NodeValue::Classes([3.0, 1.0]), 4.0, 4);
        assert_eq!(t.predict_proba(&[0.0]).unwrap(), [0.75, 0.25]);
        assert_eq!(t.depth(), 0);
        assert_eq!(t.n_leaves(), 1);
    }

    #[test]
    fn routing_and_ties_go_left() {
        let t = stump(0.5, NodeValue::Scalar(-1.0), NodeValue::Scalar(1.0));
        assert_eq!(t.predict_scalar(&[0.4]).unwrap(), -1.0);
        assert_eq!(t.predict_scalar(&[0.5]).unwrap(), -1.0);
        assert_eq!(t.predict_scalar(&[0.6]).unwrap(), 1.0);
        assert!(matches!(t.predict_scalar(&[f64::NAN]), Err(Error::Value(_))));
    }

    #[test]
    fn from_nodes_rejects_cycles() {
        let mut nodes = stump(0.5, NodeValue::Scalar(0.0), NodeValue::Scalar(1.0)).nodes;
        nodes[1].split = Some(Split { feature: 0, threshold: 0.0, left: 0, right: 2 });
        assert!(Tree::from_nodes(nodes).is_err());
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let t = stump(0.1 + 0.2, NodeValue::Classes([1.0 / 3.0, 2.0]), NodeValue::Classes([0.7, 1e-300]));
        let s = serde_json::to_string(&t).unwrap();
        let back: Tree = serde_json::from_str(&s).unwrap();
        assert_eq!(back.nodes.len(), 3);
        for (a, b) in back.nodes.iter().zip(&t.nodes) {
            assert_eq!(a.split, b.split);
            assert_eq!(a.value, b.value);
            assert_eq!(a.cover.to_bits(), b.cover.to_bits());
        }
        assert!(s.contains("\"feature\":null"));
    }
}
