use serde::{Deserialize, Serialize};

use super::split::{
    best_split_exact_with, best_split_histogram_with, BinMapper, Histogram, NodeStats,
    SearchParams, SplitCandidate,
};
use super::{DecisionTree, GradPair, Node};
use crate::data::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    /// Expand every node at depth d before any node at depth d + 1.
    LevelWise,
    /// Repeatedly split the frontier leaf with the largest gain.
    LeafWise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SplitMode {
    Exact,
    Histogram { max_bins: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowParams {
    pub max_depth: usize,
    /// Leaf budget; `None` is unbounded (only meaningful for level-wise growth).
    pub max_leaves: Option<usize>,
    pub growth: Growth,
    pub split: SplitMode,
    pub min_child_weight: f64,
    pub lambda: f64,
    pub gamma: f64,
}

impl Default for GrowParams {
    fn default() -> Self {
        Self {
            max_depth: 6,
            max_leaves: None,
            growth: Growth::LevelWise,
            split: SplitMode::Exact,
            min_child_weight: 1.0,
            lambda: 1.0,
            gamma: 0.0,
        }
    }
}

/// Binned view of the training matrix, shared across the trees of one model.
pub(crate) struct Binned {
    pub mapper: BinMapper,
    pub cells: Vec<u16>,
}

impl Binned {
    pub fn new(x: &Matrix, max_bins: usize) -> Self {
        let mapper = BinMapper::fit(x, max_bins);
        let cells = mapper.transform(x);
        Self { mapper, cells }
    }
}

struct Open {
    node: usize,
    depth: usize,
    rows: Vec<usize>,
    split: Option<SplitCandidate>,
}

struct Grower<'a> {
    x: &'a Matrix,
    grads: &'a [GradPair],
    params: GrowParams,
    search: SearchParams,
    binned: Option<&'a Binned>,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn leaf_value(&self, stats: NodeStats) -> f64 {
        let denom = stats.h + self.params.lambda;
        // zero-hessian leaves (fully saturated rows with lambda = 0) stay at 0
        if denom > 0.0 {
            -stats.g / denom
        } else {
            0.0
        }
    }

    fn open(&mut self, node: usize, depth: usize, rows: Vec<usize>) -> Open {
        assert!(!rows.is_empty(), "EmptyNode: growth produced a node without rows");
        let stats = NodeStats::of(&rows, self.grads);
        self.nodes[node] = Node::Leaf {
            value: self.leaf_value(stats),
            cover: stats.h,
        };
        let split = if depth < self.params.max_depth && rows.len() >= 2 {
            match self.binned {
                None => best_split_exact_with(self.x, &rows, self.grads, &self.search),
                Some(b) => {
                    let hist = Histogram::build(&b.mapper, &b.cells, &rows, self.grads);
                    best_split_histogram_with(&hist, &b.mapper, &self.search)
                }
            }
        } else {
            None
        };
        Open {
            node,
            depth,
            rows,
            split,
        }
    }

    /// Turns an open leaf into a split node and returns its two children.
    fn split(&mut self, open: Open) -> (Open, Open) {
        let s = open.split.expect("split requested on a leaf without candidate");
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = open
            .rows
            .iter()
            .partition(|&&r| self.x.get(r, s.feature) <= s.threshold);
        let cover = self.nodes[open.node].cover();
        let left = self.nodes.len();
        let right = left + 1;
        self.nodes.push(Node::Leaf { value: 0.0, cover: 0.0 });
        self.nodes.push(Node::Leaf { value: 0.0, cover: 0.0 });
        self.nodes[open.node] = Node::Split {
            feature: s.feature,
            threshold: s.threshold,
            left,
            right,
            cover,
        };
        let l = self.open(left, open.depth + 1, left_rows);
        let r = self.open(right, open.depth + 1, right_rows);
        (l, r)
    }
}

/// Grows one tree on `rows` with per-row gradient pairs.
///
/// Leaf values are the Newton step `-G / (H + lambda)`; with `h = 1` and
/// `lambda = 0` this is the mean negative gradient, and with `g = -y`,
/// `h = 1` it is the positive-class fraction.
pub fn grow_tree(x: &Matrix, rows: &[usize], grads: &[GradPair], params: &GrowParams) -> DecisionTree {
    grow_tree_inner(x, rows, grads, params, None)
}

pub(crate) fn grow_tree_inner(
    x: &Matrix,
    rows: &[usize],
    grads: &[GradPair],
    params: &GrowParams,
    binned: Option<&Binned>,
) -> DecisionTree {
    let owned;
    let binned = match (params.split, binned) {
        (SplitMode::Exact, _) => None,
        (SplitMode::Histogram { .. }, Some(b)) => Some(b),
        (SplitMode::Histogram { max_bins }, None) => {
            owned = Binned::new(x, max_bins);
            Some(&owned)
        }
    };
    let mut g = Grower {
        x,
        grads,
        params: *params,
        search: SearchParams {
            lambda: params.lambda,
            gamma: params.gamma,
            min_child_weight: params.min_child_weight,
        },
        binned,
        nodes: vec![Node::Leaf { value: 0.0, cover: 0.0 }],
    };
    let root = g.open(0, 0, rows.to_vec());
    let max_leaves = params.max_leaves.unwrap_or(usize::MAX);
    let mut n_leaves = 1usize;

    match params.growth {
        Growth::LevelWise => {
            let mut level = vec![root];
            while !level.is_empty() {
                let mut next = Vec::new();
                for open in level {
                    if open.split.is_some() && n_leaves < max_leaves {
                        let (l, r) = g.split(open);
                        n_leaves += 1;
                        next.push(l);
                        next.push(r);
                    }
                }
                level = next;
            }
        }
        Growth::LeafWise => {
            let mut frontier = vec![root];
            while n_leaves < max_leaves {
                // max gain, ties to the lowest node id
                let pick = frontier
                    .iter()
                    .enumerate()
                    .filter_map(|(i, o)| o.split.as_ref().map(|s| (i, s.gain, o.node)))
                    .max_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)));
                let Some((i, _, _)) = pick else { break };
                let open = frontier.swap_remove(i);
                let (l, r) = g.split(open);
                n_leaves += 1;
                frontier.push(l);
                frontier.push(r);
            }
        }
    }
    DecisionTree { nodes: g.nodes }
}
