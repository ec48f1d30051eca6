//! Bootstrap-aggregated classification trees.
//!
//! Each tree is grown by the shared tree machinery with `g = -y * m` and
//! `h = m`, where `m` is the row's bootstrap multiplicity, and `lambda = 0`.
//! Under that choice the split gain is the weighted Gini decrease (up to a
//! factor) and every leaf holds the positive-class fraction of its rows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::tree::{grow_tree, DecisionTree, GradPair, GrowParams, Growth, SplitMode};

/// `ceil(ratio * n)` draws from `0..n` with replacement.
pub fn bootstrap_sample(n: usize, ratio: f64, seed: u64) -> Vec<usize> {
    let draws = ((ratio * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..draws).map(|_| rng.gen_range(0..n)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Sampling {
    Bootstrap { ratio: f64 },
    /// Every tree sees the training rows once; for debugging.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaggingConfig {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub sampling: Sampling,
    pub min_child_weight: f64,
    pub seed: u64,
}

impl Default for BaggingConfig {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            max_depth: 16,
            sampling: Sampling::Bootstrap { ratio: 1.0 },
            min_child_weight: 1.0,
            seed: 0,
        }
    }
}

impl BaggingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::InvalidConfig("n_estimators must be at least 1".into()));
        }
        if let Sampling::Bootstrap { ratio } = self.sampling {
            if !(ratio > 0.0 && ratio.is_finite()) {
                return Err(Error::InvalidConfig("bootstrap ratio must be positive".into()));
            }
        }
        if !(self.min_child_weight >= 0.0) {
            return Err(Error::InvalidConfig("min_child_weight must be non-negative".into()));
        }
        Ok(())
    }

    fn grow_params(&self) -> GrowParams {
        GrowParams {
            max_depth: self.max_depth,
            max_leaves: None,
            growth: Growth::LevelWise,
            split: SplitMode::Exact,
            min_child_weight: self.min_child_weight,
            lambda: 0.0,
            gamma: 0.0,
        }
    }
}

/// Serialized family tag of a bagging model file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BaggingFamily {
    #[default]
    Bagging,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaggingModel {
    pub family: BaggingFamily,
    pub config: BaggingConfig,
    pub n_features: usize,
    #[serde(default)]
    pub feature_names: Vec<String>,
    pub trees: Vec<DecisionTree>,
}

impl BaggingModel {
    pub fn proba_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().fold(0.0, |s, t| s + t.predict(row)) / self.trees.len() as f64
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.n_features {
            return Err(Error::FeatureCountMismatch {
                expected: self.n_features,
                got: x.n_cols(),
            });
        }
        Ok(x.rows().map(|r| self.proba_row(r)).collect())
    }

    pub fn predict_label(&self, x: &Matrix) -> Result<Vec<u8>> {
        Ok(self
            .predict_proba(x)?
            .into_iter()
            .map(|p| u8::from(p > 0.5))
            .collect())
    }
}

fn grow_one(x: &Matrix, y: &[u8], cfg: &BaggingConfig, index: usize) -> DecisionTree {
    let n = x.n_rows();
    let mut mult = vec![0.0; n];
    match cfg.sampling {
        Sampling::Bootstrap { ratio } => {
            for r in bootstrap_sample(n, ratio, cfg.seed.wrapping_add(index as u64)) {
                mult[r] += 1.0;
            }
        }
        Sampling::Identity => mult.iter_mut().for_each(|m| *m = 1.0),
    }
    let rows: Vec<usize> = (0..n).filter(|&r| mult[r] > 0.0).collect();
    let grads: Vec<GradPair> = y
        .iter()
        .zip(&mult)
        .map(|(&l, &m)| GradPair {
            g: -f64::from(l) * m,
            h: m,
        })
        .collect();
    grow_tree(x, &rows, &grads, &cfg.grow_params())
}

/// Trains `n_estimators` trees in parallel; tree `i` uses seed `seed + i`.
pub fn train_bagging(x: &Matrix, y: &[u8], cfg: &BaggingConfig) -> Result<BaggingModel> {
    cfg.validate()?;
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.n_rows(),
            right: y.len(),
        });
    }
    if x.n_cols() == 0 {
        return Err(Error::EmptyFeatureSet);
    }
    if let Some(&bad) = y.iter().find(|&&l| l > 1) {
        return Err(Error::NonBinary(bad));
    }
    let positives = y.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::SingleClassTraining);
    }
    let trees = (0..cfg.n_estimators)
        .into_par_iter()
        .map(|i| grow_one(x, y, cfg, i))
        .collect();
    Ok(BaggingModel {
        family: BaggingFamily::Bagging,
        config: cfg.clone(),
        n_features: x.n_cols(),
        feature_names: Vec::new(),
        trees,
    })
}
