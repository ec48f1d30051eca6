//! Gradient boosting on decision trees, in three flavours:
//!
//! * [`Family::Gbdt`]: first-order boosting. Trees fit the negative gradient
//!   with unit hessians, so leaves are mean residuals.
//! * [`Family::Xgb`]: second-order boosting with L2 leaf regularization and
//!   exact-greedy, level-wise trees.
//! * [`Family::Lgbm`]: second-order boosting with histogram splits, leaf-wise
//!   growth under a depth limit, and optional gradient-based one-side sampling.
//!
//! All three share the additive model `margin(x) = base + eta * sum_k tree_k(x)`.
//! Shrinkage is applied at prediction time; stored leaf values are unscaled.

mod goss;
mod objective;

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::tree::{grow_tree_inner, Binned};
use crate::tree::{DecisionTree, GrowParams, Growth, SplitMode};

pub use crate::tree::GradPair;
pub use goss::{goss_sample, GossParams, GossSample};
pub use objective::{leaf_weight, logistic_grad_hess, logistic_loss, sigmoid, Objective};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "GBDT")]
    Gbdt,
    #[serde(rename = "XGB")]
    Xgb,
    #[serde(rename = "LGBM")]
    Lgbm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoostConfig {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub max_depth: usize,
    #[serde(default)]
    pub max_leaves: Option<usize>,
    pub growth: Growth,
    pub split: SplitMode,
    pub min_child_weight: f64,
    #[serde(default)]
    pub goss: Option<GossParams>,
    /// Initial probability (logistic) or value (squared error).
    pub base_score: f64,
    #[serde(default)]
    pub objective: Objective,
    pub seed: u64,
}

impl BoostConfig {
    /// Second-order settings: 94 trees, eta 0.001, gamma 0, depth 6, exact greedy.
    pub fn xgb() -> Self {
        Self {
            n_trees: 94,
            learning_rate: 0.001,
            lambda: 1.0,
            gamma: 0.0,
            max_depth: 6,
            max_leaves: None,
            growth: Growth::LevelWise,
            split: SplitMode::Exact,
            min_child_weight: 1.0,
            goss: None,
            base_score: 0.5,
            objective: Objective::Logistic,
            seed: 0,
        }
    }

    pub fn gbdt() -> Self {
        Self {
            n_trees: 100,
            learning_rate: 0.1,
            lambda: 0.0,
            max_depth: 3,
            ..Self::xgb()
        }
    }

    pub fn lgbm() -> Self {
        Self {
            n_trees: 100,
            learning_rate: 0.1,
            lambda: 0.0,
            max_depth: 8,
            max_leaves: Some(31),
            growth: Growth::LeafWise,
            split: SplitMode::Histogram { max_bins: 255 },
            ..Self::xgb()
        }
    }

    pub fn for_family(family: Family) -> Self {
        match family {
            Family::Gbdt => Self::gbdt(),
            Family::Xgb => Self::xgb(),
            Family::Lgbm => Self::lgbm(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_trees == 0 {
            return bad("n_trees must be at least 1");
        }
        // eta = 0 is accepted and yields a frozen model
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(self.lambda >= 0.0) || !(self.gamma >= 0.0) || !(self.min_child_weight >= 0.0) {
            return bad("lambda, gamma and min_child_weight must be non-negative");
        }
        if self.max_leaves == Some(0) {
            return bad("max_leaves must be at least 1");
        }
        if let SplitMode::Histogram { max_bins } = self.split {
            if !(2..=u16::MAX as usize).contains(&max_bins) {
                return bad("max_bins must be in 2..=65535");
            }
        }
        if let Some(g) = self.goss {
            if !(g.top_rate >= 0.0 && g.other_rate >= 0.0 && g.top_rate + g.other_rate <= 1.0) {
                return bad("GOSS rates must be non-negative with a + b <= 1");
            }
        }
        if self.objective == Objective::Logistic && !(self.base_score > 0.0 && self.base_score < 1.0) {
            return bad("base_score must be a probability in (0, 1)");
        }
        Ok(())
    }

    fn grow_params(&self) -> GrowParams {
        GrowParams {
            max_depth: self.max_depth,
            max_leaves: self.max_leaves,
            growth: self.growth,
            split: self.split,
            min_child_weight: self.min_child_weight,
            lambda: self.lambda,
            gamma: self.gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoostedModel {
    pub family: Family,
    pub config: BoostConfig,
    pub n_features: usize,
    #[serde(default)]
    pub feature_names: Vec<String>,
    pub base_margin: f64,
    pub trees: Vec<DecisionTree>,
}

impl BoostedModel {
    pub fn learning_rate(&self) -> f64 {
        self.config.learning_rate
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if width != self.n_features {
            return Err(Error::FeatureCountMismatch {
                expected: self.n_features,
                got: width,
            });
        }
        Ok(())
    }

    /// Margin of one row; the row width is not checked.
    pub fn margin_row(&self, row: &[f64]) -> f64 {
        let eta = self.config.learning_rate;
        self.trees
            .iter()
            .fold(self.base_margin, |m, t| m + eta * t.predict(row))
    }

    pub fn predict_margin(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.check_width(x.n_cols())?;
        Ok(x.rows().map(|r| self.margin_row(r)).collect())
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(self.predict_margin(x)?.into_iter().map(sigmoid).collect())
    }

    /// Label 1 iff probability > 0.5.
    pub fn predict_label(&self, x: &Matrix) -> Result<Vec<u8>> {
        Ok(self
            .predict_proba(x)?
            .into_iter()
            .map(|p| u8::from(p > 0.5))
            .collect())
    }

    /// Model restricted to its first `k` trees.
    pub fn prefix(&self, k: usize) -> BoostedModel {
        BoostedModel {
            trees: self.trees[..k.min(self.trees.len())].to_vec(),
            ..self.clone()
        }
    }
}

fn check_training_data(x: &Matrix, y: &[f64], objective: Objective) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.n_rows(),
            right: y.len(),
        });
    }
    if x.n_cols() == 0 {
        return Err(Error::EmptyFeatureSet);
    }
    if x.n_rows() == 0 {
        return Err(Error::InvalidConfig("no training rows".into()));
    }
    if objective == Objective::Logistic {
        if let Some(&bad) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::NonBinary(bad as u8));
        }
        let positives = y.iter().filter(|&&v| v == 1.0).count();
        if positives == 0 || positives == y.len() {
            return Err(Error::SingleClassTraining);
        }
    }
    Ok(())
}

/// Trains a boosted model of the given family. `y` holds 0/1 labels for the
/// logistic objective and real targets for squared error.
pub fn train_boosted(family: Family, x: &Matrix, y: &[f64], cfg: &BoostConfig) -> Result<BoostedModel> {
    cfg.validate()?;
    check_training_data(x, y, cfg.objective)?;
    let n = x.n_rows();
    let base_margin = cfg.objective.base_margin(cfg.base_score);
    let params = cfg.grow_params();
    let binned = match cfg.split {
        SplitMode::Histogram { max_bins } => Some(Binned::new(x, max_bins)),
        SplitMode::Exact => None,
    };
    let all_rows: Vec<usize> = (0..n).collect();
    let mut margins = vec![base_margin; n];
    let mut trees = Vec::with_capacity(cfg.n_trees);

    for round in 0..cfg.n_trees {
        let mut grads: Vec<GradPair> = y
            .iter()
            .zip(&margins)
            .map(|(&t, &m)| cfg.objective.grad_hess(t, m))
            .collect();
        if family == Family::Gbdt {
            grads.iter_mut().for_each(|p| p.h = 1.0);
        }
        let rows = match cfg.goss {
            Some(goss) => {
                let abs: Vec<f64> = grads.iter().map(|p| p.g.abs()).collect();
                let sample = goss_sample(
                    &abs,
                    goss.top_rate,
                    goss.other_rate,
                    cfg.seed.wrapping_add(round as u64),
                );
                for (&r, &w) in sample.rows.iter().zip(&sample.weights) {
                    grads[r].g *= w;
                    grads[r].h *= w;
                }
                sample.rows
            }
            None => all_rows.clone(),
        };
        if rows.is_empty() {
            return Err(Error::InvalidConfig("GOSS sampled no rows".into()));
        }
        let tree = grow_tree_inner(x, &rows, &grads, &params, binned.as_ref());
        for (i, m) in margins.iter_mut().enumerate() {
            *m += cfg.learning_rate * tree.predict(x.row(i));
        }
        trees.push(tree);
    }

    Ok(BoostedModel {
        family,
        config: cfg.clone(),
        n_features: x.n_cols(),
        feature_names: Vec::new(),
        base_margin,
        trees,
    })
}

pub fn train_xgb(x: &Matrix, y: &[f64], cfg: &BoostConfig) -> Result<BoostedModel> {
    train_boosted(Family::Xgb, x, y, cfg)
}

pub fn train_gbdt(x: &Matrix, y: &[f64], cfg: &BoostConfig) -> Result<BoostedModel> {
    train_boosted(Family::Gbdt, x, y, cfg)
}

pub fn train_lgbm(x: &Matrix, y: &[f64], cfg: &BoostConfig) -> Result<BoostedModel> {
    train_boosted(Family::Lgbm, x, y, cfg)
}

/// Total training loss of a model under its objective.
pub fn training_loss(model: &BoostedModel, x: &Matrix, y: &[f64]) -> Result<f64> {
    let margins = model.predict_margin(x)?;
    Ok(margins
        .iter()
        .zip(y)
        .map(|(&m, &t)| model.config.objective.loss(t, m))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noisy_problem(seed: u64, n: usize, p: usize) -> (Matrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let y = rows
            .iter()
            .map(|r| {
                let s = r[0] + 0.5 * r[1] * r[1] - 0.3 + rng.gen_range(-0.6..0.6);
                f64::from(u8::from(s > 0.0))
            })
            .collect();
        (Matrix::from_rows(&rows), y)
    }

    #[test]
    fn single_leaf_round_is_newton_shift() {
        let (x, y) = noisy_problem(1, 30, 2);
        let cfg = BoostConfig {
            n_trees: 1,
            learning_rate: 1.0,
            max_depth: 0,
            ..BoostConfig::xgb()
        };
        let model = train_xgb(&x, &y, &cfg).unwrap();
        let g: f64 = y.iter().map(|&t| 0.5 - t).sum();
        let h = 0.25 * y.len() as f64;
        let expected = -g / (h + cfg.lambda);
        for m in model.predict_margin(&x).unwrap() {
            assert!((m - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn separable_data_is_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<[f64; 2]> = (0..60).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let y: Vec<f64> = rows.iter().map(|r| f64::from(u8::from(r[0] + r[1] > 0.1))).collect();
        let x = Matrix::from_rows(&rows);
        let cfg = BoostConfig {
            n_trees: 50,
            learning_rate: 0.3,
            min_child_weight: 0.0,
            ..BoostConfig::xgb()
        };
        let model = train_xgb(&x, &y, &cfg).unwrap();
        let labels = model.predict_label(&x).unwrap();
        let correct = labels.iter().zip(&y).filter(|(&l, &t)| f64::from(l) == t).count();
        assert_eq!(correct, 60);
    }

    #[test]
    fn gbdt_constant_residual_leaf_is_mean() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]);
        let y = [2.5; 4];
        let cfg = BoostConfig {
            n_trees: 1,
            learning_rate: 1.0,
            base_score: 0.0,
            objective: Objective::SquaredError,
            ..BoostConfig::gbdt()
        };
        let model = train_gbdt(&x, &y, &cfg).unwrap();
        assert_eq!(model.trees[0].nodes().len(), 1);
        assert_eq!(model.trees[0].predict(&[0.0]), 2.5);
    }

    #[test]
    fn gbdt_first_round_leaves_are_label_mean_offsets() {
        // unit hessians make each leaf the mean residual y - 0.5 of its region
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]);
        let y = [0.0, 0.0, 1.0, 1.0];
        let cfg = BoostConfig {
            n_trees: 1,
            learning_rate: 1.0,
            max_depth: 1,
            ..BoostConfig::gbdt()
        };
        let model = train_gbdt(&x, &y, &cfg).unwrap();
        let t = &model.trees[0];
        assert_eq!(t.predict(&[0.0]), -0.5);
        assert_eq!(t.predict(&[3.0]), 0.5);

        let y = [0.0, 1.0, 1.0, 1.0];
        let model = train_gbdt(&x, &y, &cfg).unwrap();
        let t = &model.trees[0];
        // best stump isolates row 0: left mean 0, right mean 1
        assert_eq!(t.predict(&[0.0]), -0.5);
        assert_eq!(t.predict(&[2.0]), 0.5);
    }

    #[test]
    fn zero_learning_rate_freezes_model() {
        let (x, y) = noisy_problem(3, 40, 3);
        let cfg = BoostConfig {
            learning_rate: 0.0,
            n_trees: 5,
            ..BoostConfig::gbdt()
        };
        let model = train_gbdt(&x, &y, &cfg).unwrap();
        assert!(model.predict_proba(&x).unwrap().iter().all(|&p| p == 0.5));
        // probability exactly 0.5 is labelled 0
        assert!(model.predict_label(&x).unwrap().iter().all(|&l| l == 0));
    }

    #[test]
    fn two_identical_stumps_double_the_margin() {
        let (x, y) = noisy_problem(4, 50, 2);
        let cfg = BoostConfig {
            n_trees: 1,
            learning_rate: 0.1,
            max_depth: 1,
            ..BoostConfig::xgb()
        };
        let mut model = train_xgb(&x, &y, &cfg).unwrap();
        model.trees.push(model.trees[0].clone());
        for (i, m) in model.predict_margin(&x).unwrap().into_iter().enumerate() {
            let stump = model.trees[0].predict(x.row(i));
            assert!((m - 2.0 * 0.1 * stump).abs() < 1e-15);
        }
    }

    #[test]
    fn margins_are_additive_over_rounds() {
        let (x, y) = noisy_problem(5, 80, 3);
        let model = train_xgb(&x, &y, &BoostConfig { n_trees: 12, learning_rate: 0.2, ..BoostConfig::xgb() }).unwrap();
        for k in 1..=12 {
            let full = model.prefix(k).predict_margin(&x).unwrap();
            let prev = model.prefix(k - 1).predict_margin(&x).unwrap();
            for i in 0..x.n_rows() {
                assert_eq!(full[i], prev[i] + 0.2 * model.trees[k - 1].predict(x.row(i)));
            }
        }
    }

    #[test]
    fn label_is_sign_of_margin() {
        for seed in 0..10 {
            let (x, y) = noisy_problem(10 + seed, 60, 3);
            let model = train_lgbm(&x, &y, &BoostConfig { n_trees: 7, ..BoostConfig::lgbm() }).unwrap();
            let margins = model.predict_margin(&x).unwrap();
            let labels = model.predict_label(&x).unwrap();
            for (m, l) in margins.iter().zip(labels) {
                assert_eq!(l == 1, *m > 0.0);
            }
        }
    }

    #[test]
    fn training_loss_is_non_increasing() {
        for seed in 0..5 {
            let (x, y) = noisy_problem(20 + seed, 150, 4);
            let cfg = BoostConfig {
                n_trees: 50,
                learning_rate: 0.5,
                gamma: 0.0,
                min_child_weight: 0.0,
                ..BoostConfig::xgb()
            };
            let model = train_xgb(&x, &y, &cfg).unwrap();
            let mut last = f64::INFINITY;
            for k in 0..=50 {
                let loss = training_loss(&model.prefix(k), &x, &y).unwrap();
                assert!(loss <= last + 1e-12, "round {k}: {loss} > {last}");
                last = loss;
            }
        }
    }

    #[test]
    fn lgbm_stump_matches_xgb_stump() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rows: Vec<Vec<f64>> = (0..80).map(|_| (0..3).map(|_| rng.gen_range(0..12) as f64).collect()).collect();
        let y: Vec<f64> = rows.iter().map(|r| f64::from(u8::from(r[1] + rng.gen_range(0.0..6.0) > 8.0))).collect();
        let x = Matrix::from_rows(&rows);
        let shared = BoostConfig {
            n_trees: 10,
            learning_rate: 0.3,
            max_depth: 1,
            lambda: 1.0,
            ..BoostConfig::xgb()
        };
        let xgb = train_xgb(&x, &y, &shared).unwrap();
        let lgbm = train_lgbm(
            &x,
            &y,
            &BoostConfig {
                growth: Growth::LeafWise,
                max_leaves: Some(31),
                split: SplitMode::Histogram { max_bins: 255 },
                ..shared
            },
        )
        .unwrap();
        for (a, b) in xgb.trees.iter().zip(&lgbm.trees) {
            assert_eq!(a.nodes().len(), b.nodes().len());
            for i in 0..x.n_rows() {
                assert!((a.predict(x.row(i)) - b.predict(x.row(i))).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn single_leaf_budget() {
        let (x, y) = noisy_problem(7, 50, 3);
        let model = train_lgbm(&x, &y, &BoostConfig { max_leaves: Some(1), n_trees: 4, ..BoostConfig::lgbm() }).unwrap();
        assert!(model.trees.iter().all(|t| t.nodes().len() == 1));
    }

    #[test]
    fn goss_training_runs_and_is_deterministic() {
        let (x, y) = noisy_problem(8, 200, 4);
        let cfg = BoostConfig {
            goss: Some(GossParams { top_rate: 0.2, other_rate: 0.1 }),
            seed: 17,
            n_trees: 20,
            ..BoostConfig::lgbm()
        };
        let a = train_lgbm(&x, &y, &cfg).unwrap();
        let b = train_lgbm(&x, &y, &cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn invalid_inputs() {
        let (x, y) = noisy_problem(9, 20, 2);
        assert!(train_xgb(&x, &y, &BoostConfig { n_trees: 0, ..BoostConfig::xgb() }).is_err());
        assert!(matches!(train_xgb(&x, &[1.0; 20], &BoostConfig::xgb()), Err(Error::SingleClassTraining)));
        let empty = Matrix::new(20, 0, vec![]);
        assert!(matches!(train_xgb(&empty, &y, &BoostConfig::xgb()), Err(Error::EmptyFeatureSet)));
        let bad_goss = BoostConfig { goss: Some(GossParams { top_rate: 0.7, other_rate: 0.5 }), ..BoostConfig::lgbm() };
        assert!(train_lgbm(&x, &y, &bad_goss).is_err());

        let model = train_xgb(&x, &y, &BoostConfig::xgb()).unwrap();
        let narrow = Matrix::new(1, 1, vec![0.0]);
        assert!(matches!(model.predict_margin(&narrow), Err(Error::FeatureCountMismatch { expected: 2, got: 1 })));
    }

    #[test]
    fn model_json_round_trips_bitwise() {
        let (x, y) = noisy_problem(11, 70, 3);
        let model = train_lgbm(&x, &y, &BoostConfig { n_trees: 5, ..BoostConfig::lgbm() }).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let back: BoostedModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}
