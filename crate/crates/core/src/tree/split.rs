use serde::{Deserialize, Serialize};

use super::GradPair;
use crate::data::Matrix;

/// Aggregated gradient statistics of a set of rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    pub g: f64,
    pub h: f64,
    pub count: usize,
}

impl NodeStats {
    pub fn of(rows: &[usize], grads: &[GradPair]) -> Self {
        rows.iter().fold(Self::default(), |acc, &r| acc.add(grads[r]))
    }

    fn add(self, p: GradPair) -> Self {
        Self {
            g: self.g + p.g,
            h: self.h + p.h,
            count: self.count + 1,
        }
    }

    fn minus(self, other: Self) -> Self {
        Self {
            g: self.g - other.g,
            h: self.h - other.h,
            count: self.count - other.count,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
    pub left: NodeStats,
    pub right: NodeStats,
}

/// Regularized second-order split gain, `gamma` subtracted once per split.
pub fn split_gain(left: NodeStats, right: NodeStats, lambda: f64, gamma: f64) -> f64 {
    let score = |g: f64, h: f64| g * g / (h + lambda);
    0.5 * (score(left.g, left.h) + score(right.g, right.h)
        - score(left.g + right.g, left.h + right.h))
        - gamma
}

/// Split-search constraints shared by the exact and histogram searches.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SearchParams {
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
}

impl SearchParams {
    fn evaluate(&self, left: NodeStats, right: NodeStats) -> Option<f64> {
        if left.count == 0
            || right.count == 0
            || left.h < self.min_child_weight
            || right.h < self.min_child_weight
            || left.h + self.lambda <= 0.0
            || right.h + self.lambda <= 0.0
        {
            return None;
        }
        let gain = split_gain(left, right, self.lambda, self.gamma);
        (gain > 0.0).then_some(gain)
    }
}

/// Midpoint of two adjacent distinct values, never rounding up onto `hi`.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}

/// Keeps the better of two candidates; ties keep the incumbent, so scanning
/// features and thresholds in ascending order yields the lowest feature index
/// and then the smallest threshold.
fn better(best: Option<SplitCandidate>, cand: SplitCandidate) -> Option<SplitCandidate> {
    match best {
        Some(b) if b.gain >= cand.gain => Some(b),
        _ => Some(cand),
    }
}

/// Exhaustive search over midpoints of adjacent distinct sorted values.
pub fn best_split_exact(
    x: &Matrix,
    rows: &[usize],
    grads: &[GradPair],
    lambda: f64,
    gamma: f64,
    min_child_weight: f64,
) -> Option<SplitCandidate> {
    let params = SearchParams {
        lambda,
        gamma,
        min_child_weight,
    };
    best_split_exact_with(x, rows, grads, &params)
}

pub(crate) fn best_split_exact_with(
    x: &Matrix,
    rows: &[usize],
    grads: &[GradPair],
    params: &SearchParams,
) -> Option<SplitCandidate> {
    let parent = NodeStats::of(rows, grads);
    let mut best = None;
    let mut column: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
    for feature in 0..x.n_cols() {
        column.clear();
        column.extend(rows.iter().map(|&r| (x.get(r, feature), r)));
        column.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut left = NodeStats::default();
        for i in 0..column.len().saturating_sub(1) {
            left = left.add(grads[column[i].1]);
            let (v, next) = (column[i].0, column[i + 1].0);
            if v == next {
                continue;
            }
            let right = parent.minus(left);
            if let Some(gain) = params.evaluate(left, right) {
                best = better(
                    best,
                    SplitCandidate {
                        feature,
                        threshold: midpoint(v, next),
                        gain,
                        left,
                        right,
                    },
                );
            }
        }
    }
    best
}

/// Per-feature cut points learned once from training data.
///
/// Bin `b` holds values in `(cuts[b-1], cuts[b]]`. When a feature has at most
/// `max_bins` distinct values every distinct value gets its own bin and the
/// cuts coincide with the exact-search midpoints; otherwise cuts are placed
/// at (approximately) equal-frequency quantiles, still on midpoints between
/// adjacent distinct values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMapper {
    pub max_bins: usize,
    pub cuts: Vec<Vec<f64>>,
}

impl BinMapper {
    pub fn fit(x: &Matrix, max_bins: usize) -> Self {
        assert!(max_bins >= 1, "max_bins must be positive");
        let cuts = (0..x.n_cols())
            .map(|j| {
                let mut values = x.column(j);
                values.sort_by(f64::total_cmp);
                feature_cuts(&values, max_bins)
            })
            .collect();
        Self { max_bins, cuts }
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.cuts[feature].len() + 1
    }

    pub fn bin(&self, feature: usize, value: f64) -> usize {
        self.cuts[feature].partition_point(|&c| c < value)
    }

    /// Bin index of every cell, row-major.
    pub fn transform(&self, x: &Matrix) -> Vec<u16> {
        let mut out = Vec::with_capacity(x.n_rows() * x.n_cols());
        for row in x.rows() {
            out.extend(row.iter().enumerate().map(|(j, &v)| self.bin(j, v) as u16));
        }
        out
    }
}

fn feature_cuts(sorted: &[f64], max_bins: usize) -> Vec<f64> {
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for &v in sorted {
        match distinct.last_mut() {
            Some((d, c)) if *d == v => *c += 1,
            _ => distinct.push((v, 1)),
        }
    }
    if distinct.len() <= max_bins {
        return distinct
            .windows(2)
            .map(|w| midpoint(w[0].0, w[1].0))
            .collect();
    }
    let per_bin = sorted.len() as f64 / max_bins as f64;
    let mut cuts = Vec::with_capacity(max_bins - 1);
    let mut seen = 0usize;
    for i in 0..distinct.len() - 1 {
        seen += distinct[i].1;
        if cuts.len() + 1 < max_bins && seen as f64 >= per_bin * (cuts.len() + 1) as f64 {
            cuts.push(midpoint(distinct[i].0, distinct[i + 1].0));
        }
    }
    cuts
}

/// Per-feature, per-bin gradient aggregates for one node.
#[derive(Debug, Clone)]
pub struct Histogram {
    pub bins: Vec<Vec<NodeStats>>,
    pub total: NodeStats,
}

impl Histogram {
    /// `binned` is the row-major output of [`BinMapper::transform`].
    pub fn build(mapper: &BinMapper, binned: &[u16], rows: &[usize], grads: &[GradPair]) -> Self {
        let n_features = mapper.cuts.len();
        let mut bins: Vec<Vec<NodeStats>> = (0..n_features)
            .map(|j| vec![NodeStats::default(); mapper.n_bins(j)])
            .collect();
        for &r in rows {
            let cells = &binned[r * n_features..(r + 1) * n_features];
            for (j, &b) in cells.iter().enumerate() {
                let slot = &mut bins[j][b as usize];
                *slot = slot.add(grads[r]);
            }
        }
        Self {
            bins,
            total: NodeStats::of(rows, grads),
        }
    }
}

/// Best split restricted to bin boundaries.
pub fn best_split_histogram(
    hist: &Histogram,
    mapper: &BinMapper,
    lambda: f64,
    gamma: f64,
    min_child_weight: f64,
) -> Option<SplitCandidate> {
    let params = SearchParams {
        lambda,
        gamma,
        min_child_weight,
    };
    best_split_histogram_with(hist, mapper, &params)
}

pub(crate) fn best_split_histogram_with(
    hist: &Histogram,
    mapper: &BinMapper,
    params: &SearchParams,
) -> Option<SplitCandidate> {
    let mut best = None;
    for (feature, bins) in hist.bins.iter().enumerate() {
        let mut left = NodeStats::default();
        for b in 0..bins.len().saturating_sub(1) {
            left = NodeStats {
                g: left.g + bins[b].g,
                h: left.h + bins[b].h,
                count: left.count + bins[b].count,
            };
            if bins[b].count == 0 {
                continue;
            }
            let right = hist.total.minus(left);
            if let Some(gain) = params.evaluate(left, right) {
                best = better(
                    best,
                    SplitCandidate {
                        feature,
                        threshold: mapper.cuts[feature][b],
                        gain,
                        left,
                        right,
                    },
                );
            }
        }
    }
    best
}
