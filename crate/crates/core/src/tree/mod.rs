//! Binary decision trees shared by every learner in the crate.
//!
//! Routing convention: a row goes left when `x[feature] <= threshold`.
//! Leaves hold a real value and a cover (the sum of hessians, which is the
//! training weight for first-order and bagged trees).

mod grow;
mod split;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use grow::{grow_tree, GrowParams, Growth, SplitMode};
pub(crate) use grow::{grow_tree_inner, Binned};
pub use split::{
    best_split_exact, best_split_histogram, split_gain, BinMapper, Histogram, NodeStats,
    SplitCandidate,
};

/// First and second derivative of the loss for one row (weights folded in).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradPair {
    pub g: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        cover: f64,
    },
    Leaf {
        value: f64,
        cover: f64,
    },
}

impl Node {
    pub fn cover(&self) -> f64 {
        match *self {
            Node::Split { cover, .. } | Node::Leaf { cover, .. } => cover,
        }
    }
}

/// Flat node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<NodeRecord>", try_from = "Vec<NodeRecord>")]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf(value: f64, cover: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value, cover }],
        }
    }

    /// Validates structure before accepting `nodes`.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        let tree = Self { nodes };
        tree.validate()?;
        Ok(tree)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { value, .. } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => id = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Id of the leaf `row` reaches.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut id = 0;
        while let Node::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } = self.nodes[id]
        {
            id = if row[feature] <= threshold { left } else { right };
        }
        id
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Largest feature index referenced plus one (0 for a single leaf).
    pub fn n_features_used(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(feature + 1),
                Node::Leaf { .. } => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Single root, two children per split, every node reachable exactly once.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::UnsupportedNode("tree has no nodes".into()));
        }
        let mut visited = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            if id >= self.nodes.len() {
                return Err(Error::UnsupportedNode(format!("child id {id} out of range")));
            }
            if visited[id] {
                return Err(Error::UnsupportedNode(format!("node {id} reached twice")));
            }
            visited[id] = true;
            match &self.nodes[id] {
                Node::Split {
                    left,
                    right,
                    threshold,
                    ..
                } => {
                    if !threshold.is_finite() {
                        return Err(Error::UnsupportedNode(format!(
                            "node {id} has non-finite threshold"
                        )));
                    }
                    stack.push(*right);
                    stack.push(*left);
                }
                Node::Leaf { value, .. } => {
                    if !value.is_finite() {
                        return Err(Error::UnsupportedNode(format!(
                            "leaf {id} has non-finite value"
                        )));
                    }
                }
            }
        }
        if let Some(id) = visited.iter().position(|v| !v) {
            return Err(Error::UnsupportedNode(format!("node {id} is unreachable")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum NodeKind {
    Split,
    Leaf,
}

/// Wire form of one node.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: usize,
    kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feature: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    cover: f64,
}

impl From<DecisionTree> for Vec<NodeRecord> {
    fn from(tree: DecisionTree) -> Self {
        tree.nodes
            .into_iter()
            .enumerate()
            .map(|(id, node)| match node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    cover,
                } => NodeRecord {
                    id,
                    kind: NodeKind::Split,
                    feature: Some(feature),
                    threshold: Some(threshold),
                    left: Some(left),
                    right: Some(right),
                    value: None,
                    cover,
                },
                Node::Leaf { value, cover } => NodeRecord {
                    id,
                    kind: NodeKind::Leaf,
                    feature: None,
                    threshold: None,
                    left: None,
                    right: None,
                    value: Some(value),
                    cover,
                },
            })
            .collect()
    }
}

impl TryFrom<Vec<NodeRecord>> for DecisionTree {
    type Error = Error;

    fn try_from(records: Vec<NodeRecord>) -> Result<Self> {
        let nodes = records
            .into_iter()
            .enumerate()
            .map(|(pos, r)| {
                if r.id != pos {
                    return Err(Error::UnsupportedNode(format!(
                        "node id {} at position {pos}",
                        r.id
                    )));
                }
                match (r.kind, r.feature, r.threshold, r.left, r.right, r.value) {
                    (NodeKind::Split, Some(feature), Some(threshold), Some(left), Some(right), None) => {
                        Ok(Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                            cover: r.cover,
                        })
                    }
                    (NodeKind::Leaf, None, None, None, None, Some(value)) => Ok(Node::Leaf {
                        value,
                        cover: r.cover,
                    }),
                    _ => Err(Error::UnsupportedNode(format!(
                        "node {pos} has fields inconsistent with its kind"
                    ))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        DecisionTree::from_nodes(nodes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn stump(feature: usize, threshold: f64, left: f64, right: f64) -> DecisionTree {
        DecisionTree::from_nodes(vec![
            Node::Split {
                feature,
                threshold,
                left: 1,
                right: 2,
                cover: 2.0,
            },
            Node::Leaf {
                value: left,
                cover: 1.0,
            },
            Node::Leaf {
                value: right,
                cover: 1.0,
            },
        ])
        .unwrap()
    }

    #[test]
    fn single_leaf_predicts_constant() {
        let t = DecisionTree::leaf(0.3, 1.0);
        assert_eq!(t.predict(&[]), 0.3);
        assert_eq!(t.predict(&[1.0, -4.0]), 0.3);
    }

    #[test]
    fn routing_and_boundary() {
        let t = stump(2, 1.5, -1.0, 1.0);
        assert_eq!(t.predict(&[9.0, 9.0, 1.0]), -1.0);
        assert_eq!(t.predict(&[9.0, 9.0, 1.5]), -1.0);
        assert_eq!(t.predict(&[9.0, 9.0, 1.6]), 1.0);
    }

    #[test]
    fn json_round_trip() {
        let t = stump(0, 0.125, -0.5, 0.25);
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("\"kind\":\"split\""));
        let back: DecisionTree = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn malformed_trees_rejected() {
        let cyclic = vec![Node::Split {
            feature: 0,
            threshold: 0.0,
            left: 0,
            right: 0,
            cover: 1.0,
        }];
        assert!(DecisionTree::from_nodes(cyclic).is_err());
        let orphan = vec![
            Node::Leaf {
                value: 0.0,
                cover: 1.0,
            },
            Node::Leaf {
                value: 1.0,
                cover: 1.0,
            },
        ];
        assert!(DecisionTree::from_nodes(orphan).is_err());
        let json = r#"[{"id":0,"kind":"split","feature":1,"cover":1.0}]"#;
        assert!(serde_json::from_str::<DecisionTree>(json).is_err());
    }
}
