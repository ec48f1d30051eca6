//! Shapley-value attribution.
//!
//! Every method here uses the same interventional value function: for a
//! coalition `S`, `v(S)` is the mean over background rows `z` of `f(x_S, z_~S)`.
//! [`exact_shapley`] enumerates all coalitions, [`sampling_shapley`] averages
//! marginal contributions along random permutations, and [`tree_shap`] gets
//! the exact answer for tree ensembles by walking each tree once per `(x, z)`.

mod export;
mod treeshap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};

pub use export::{beeswarm_csv, phi_csv, ranking_svg};
pub use treeshap::{combine_vote_share, explain_member, explain_voting, tree_shap, tree_shap_pair};

pub const MAX_EXACT_FEATURES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueKind {
    Margin,
    Probability,
    VoteShare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionResult {
    pub base_value: f64,
    /// One row of contributions per explained row.
    pub phi: Vec<Vec<f64>>,
    pub model_output: Vec<f64>,
    pub value_kind: ValueKind,
}

impl AttributionResult {
    /// Largest `|base + sum(phi) - output|` over rows.
    pub fn local_accuracy_error(&self) -> f64 {
        self.phi
            .iter()
            .zip(&self.model_output)
            .map(|(p, &out)| (self.base_value + p.iter().sum::<f64>() - out).abs())
            .fold(0.0, f64::max)
    }

    pub fn n_features(&self) -> usize {
        self.phi.first().map_or(0, Vec::len)
    }

    pub fn mean_abs(&self) -> Vec<f64> {
        let n = self.phi.len().max(1) as f64;
        (0..self.n_features())
            .map(|j| self.phi.iter().map(|p| p[j].abs()).sum::<f64>() / n)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub feature: String,
    pub mean_abs_phi: f64,
}

/// Descending mean `|phi|`; ties keep feature order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub entries: Vec<RankEntry>,
}

impl FeatureRanking {
    pub fn position(&self, feature: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.feature == feature)
    }

    pub fn top(&self, k: usize) -> Vec<&str> {
        self.entries.iter().take(k).map(|e| e.feature.as_str()).collect()
    }
}

pub fn rank_features(attr: &AttributionResult, names: &[String]) -> Result<FeatureRanking> {
    if names.len() != attr.n_features() {
        return Err(Error::LengthMismatch {
            left: names.len(),
            right: attr.n_features(),
        });
    }
    let scores = attr.mean_abs();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(FeatureRanking {
        entries: order
            .into_iter()
            .map(|j| RankEntry {
                feature: names[j].clone(),
                mean_abs_phi: scores[j],
            })
            .collect(),
    })
}

fn check_background(row: &[f64], background: &Matrix) -> Result<()> {
    if background.n_rows() == 0 {
        return Err(Error::EmptyBackground);
    }
    if background.n_cols() != row.len() {
        return Err(Error::FeatureCountMismatch {
            expected: row.len(),
            got: background.n_cols(),
        });
    }
    Ok(())
}

/// Mean of `f` over background rows with features in `from_x` taken from `x`.
fn coalition_value(f: &dyn Fn(&[f64]) -> f64, x: &[f64], background: &Matrix, from_x: &[bool]) -> f64 {
    let mut mixed = vec![0.0; x.len()];
    let mut total = 0.0;
    for z in background.rows() {
        for j in 0..x.len() {
            mixed[j] = if from_x[j] { x[j] } else { z[j] };
        }
        total += f(&mixed);
    }
    total / background.n_rows() as f64
}

/// Exact Shapley values by enumerating all `2^M` coalitions. Returns `(phi, base)`.
pub fn exact_shapley(f: &dyn Fn(&[f64]) -> f64, x: &[f64], background: &Matrix) -> Result<(Vec<f64>, f64)> {
    let m = x.len();
    if m > MAX_EXACT_FEATURES {
        return Err(Error::TooManyFeatures(m));
    }
    check_background(x, background)?;
    let n_sets = 1usize << m;
    let mut from_x = vec![false; m];
    let values: Vec<f64> = (0..n_sets)
        .map(|s| {
            for (j, flag) in from_x.iter_mut().enumerate() {
                *flag = s >> j & 1 == 1;
            }
            coalition_value(f, x, background, &from_x)
        })
        .collect();

    // |S|! (M - |S| - 1)! / M!
    let mut fact = vec![1.0f64; m + 1];
    for k in 1..=m {
        fact[k] = fact[k - 1] * k as f64;
    }
    let weight: Vec<f64> = (0..m).map(|s| fact[s] * fact[m - s - 1] / fact[m]).collect();

    let mut phi = vec![0.0; m];
    for s in 0..n_sets {
        let size = s.count_ones() as usize;
        for (i, p) in phi.iter_mut().enumerate() {
            if s >> i & 1 == 0 {
                *p += weight[size] * (values[s | 1 << i] - values[s]);
            }
        }
    }
    Ok((phi, values[0]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingEstimate {
    pub phi: Vec<f64>,
    /// Standard error of each component of `phi`.
    pub std_err: Vec<f64>,
    pub base_value: f64,
}

/// Permutation-sampling estimate of the same quantity as [`exact_shapley`].
pub fn sampling_shapley(
    f: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    background: &Matrix,
    n_permutations: usize,
    seed: u64,
) -> Result<SamplingEstimate> {
    if n_permutations == 0 {
        return Err(Error::InvalidConfig("n_permutations must be at least 1".into()));
    }
    check_background(x, background)?;
    let m = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..m).collect();
    let mut sum = vec![0.0; m];
    let mut sum_sq = vec![0.0; m];
    let base = coalition_value(f, x, background, &vec![false; m]);
    let mut from_x = vec![false; m];
    for _ in 0..n_permutations {
        order.shuffle(&mut rng);
        from_x.iter_mut().for_each(|b| *b = false);
        let mut prev = base;
        for &j in &order {
            from_x[j] = true;
            let next = coalition_value(f, x, background, &from_x);
            let delta = next - prev;
            sum[j] += delta;
            sum_sq[j] += delta * delta;
            prev = next;
        }
    }
    let n = n_permutations as f64;
    let phi: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_err = if n_permutations > 1 {
        sum_sq
            .iter()
            .zip(&phi)
            .map(|(sq, mean)| ((sq / n - mean * mean).max(0.0) * n / (n - 1.0) / n).sqrt())
            .collect()
    } else {
        vec![f64::INFINITY; m]
    };
    Ok(SamplingEstimate {
        phi,
        std_err,
        base_value: base,
    })
}
