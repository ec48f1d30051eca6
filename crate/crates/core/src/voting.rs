//! Weighted hard voting over four tree ensembles.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bagging::{train_bagging, BaggingConfig, BaggingModel};
use crate::boost::{train_gbdt, train_lgbm, train_xgb, BoostConfig, BoostedModel, Family};
use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::tree::DecisionTree;

/// Any trained member model. Serialized as the inner model; the `family`
/// field selects the variant on load.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedEnsemble {
    Boosted(BoostedModel),
    Bagging(BaggingModel),
}

impl TrainedEnsemble {
    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Boosted(m) => match m.family {
                Family::Gbdt => "GBDT",
                Family::Xgb => "XGB",
                Family::Lgbm => "LGBM",
            },
            Self::Bagging(_) => "Bagging",
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Self::Boosted(m) => m.n_features,
            Self::Bagging(m) => m.n_features,
        }
    }

    pub fn feature_names(&self) -> &[String] {
        match self {
            Self::Boosted(m) => &m.feature_names,
            Self::Bagging(m) => &m.feature_names,
        }
    }

    pub fn set_feature_names(&mut self, names: Vec<String>) {
        match self {
            Self::Boosted(m) => m.feature_names = names,
            Self::Bagging(m) => m.feature_names = names,
        }
    }

    pub fn trees(&self) -> &[DecisionTree] {
        match self {
            Self::Boosted(m) => &m.trees,
            Self::Bagging(m) => &m.trees,
        }
    }

    /// `(offset, scale)` such that the raw output is `offset + scale * sum_k tree_k(x)`.
    /// The raw output is the margin for boosted models and the probability for bagging.
    pub fn additive_form(&self) -> (f64, f64) {
        match self {
            Self::Boosted(m) => (m.base_margin, m.learning_rate()),
            Self::Bagging(m) => (0.0, 1.0 / m.trees.len() as f64),
        }
    }

    /// Whether probabilities are the sigmoid of the raw output.
    pub fn is_margin_model(&self) -> bool {
        matches!(self, Self::Boosted(_))
    }

    pub fn proba_row(&self, row: &[f64]) -> f64 {
        match self {
            Self::Boosted(m) => crate::boost::sigmoid(m.margin_row(row)),
            Self::Bagging(m) => m.proba_row(row),
        }
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            Self::Boosted(m) => m.predict_proba(x),
            Self::Bagging(m) => m.predict_proba(x),
        }
    }

    pub fn predict_label(&self, x: &Matrix) -> Result<Vec<u8>> {
        Ok(self
            .predict_proba(x)?
            .into_iter()
            .map(|p| u8::from(p > 0.5))
            .collect())
    }
}

impl Serialize for TrainedEnsemble {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Boosted(m) => m.serialize(s),
            Self::Bagging(m) => m.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for TrainedEnsemble {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let value = serde_json::Value::deserialize(d)?;
        let family = value
            .get("family")
            .and_then(|f| f.as_str())
            .ok_or_else(|| D::Error::missing_field("family"))?;
        let parsed = if family == "Bagging" {
            serde_json::from_value(value).map(Self::Bagging)
        } else {
            serde_json::from_value(value).map(Self::Boosted)
        };
        parsed.map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TieBreak {
    #[default]
    PositiveClass,
    /// Follow the member with the largest weight (earliest on equal weights).
    HighestWeightMember,
}

fn check_vote_inputs(labels: &[u8], weights: &[u32]) -> Result<()> {
    if labels.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: weights.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::NonBinary(bad));
    }
    if weights.is_empty() || weights.contains(&0) {
        return Err(Error::InvalidConfig("voting weights must be positive".into()));
    }
    Ok(())
}

fn masses(labels: &[u8], weights: &[u32]) -> (u64, u64) {
    labels.iter().zip(weights).fold((0, 0), |(neg, pos), (&l, &w)| {
        if l == 1 {
            (neg, pos + u64::from(w))
        } else {
            (neg + u64::from(w), pos)
        }
    })
}

/// Weighted majority label.
pub fn hard_vote(labels: &[u8], weights: &[u32], tie_break: TieBreak) -> Result<u8> {
    Ok(vote(labels, weights, tie_break)?.0)
}

/// Label plus whether the two classes had equal weight.
pub fn vote(labels: &[u8], weights: &[u32], tie_break: TieBreak) -> Result<(u8, bool)> {
    check_vote_inputs(labels, weights)?;
    let (neg, pos) = masses(labels, weights);
    if pos != neg {
        return Ok((u8::from(pos > neg), false));
    }
    let label = match tie_break {
        TieBreak::PositiveClass => 1,
        TieBreak::HighestWeightMember => {
            let top = weights
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .map(|(i, _)| i)
                .unwrap_or(0);
            labels[top]
        }
    };
    Ok((label, true))
}

/// Fraction of total weight voting for class 1.
pub fn vote_score(labels: &[u8], weights: &[u32]) -> Result<f64> {
    check_vote_inputs(labels, weights)?;
    let (neg, pos) = masses(labels, weights);
    Ok(pos as f64 / (pos + neg) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VotingConfig {
    pub xgb: BoostConfig,
    pub lgbm: BoostConfig,
    pub gbdt: BoostConfig,
    pub bagging: BaggingConfig,
    pub weights: [u32; 4],
    #[serde(default)]
    pub tie_break: TieBreak,
}

impl Default for VotingConfig {
    fn default() -> Self {
        Self {
            xgb: BoostConfig::xgb(),
            lgbm: BoostConfig::lgbm(),
            gbdt: BoostConfig::gbdt(),
            bagging: BaggingConfig::default(),
            weights: [13, 6, 6, 1],
            tie_break: TieBreak::PositiveClass,
        }
    }
}

impl VotingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.weights.contains(&0) {
            return Err(Error::InvalidConfig("voting weights must be positive".into()));
        }
        self.xgb.validate()?;
        self.lgbm.validate()?;
        self.gbdt.validate()?;
        self.bagging.validate()
    }

    /// Applies one seed to every member.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.xgb.seed = seed;
        self.lgbm.seed = seed;
        self.gbdt.seed = seed;
        self.bagging.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VotingModel {
    /// XGB, LGBM, GBDT, Bagging.
    pub members: Vec<TrainedEnsemble>,
    pub weights: Vec<u32>,
    pub tie_break: TieBreak,
}

pub const MEMBER_NAMES: [&str; 4] = ["XGB", "LGBM", "GBDT", "Bagging"];

#[derive(Debug, Clone, PartialEq)]
pub struct VotePrediction {
    pub labels: Vec<u8>,
    pub scores: Vec<f64>,
    pub ties: Vec<bool>,
    /// Per member, per row.
    pub member_labels: Vec<Vec<u8>>,
    pub member_probas: Vec<Vec<f64>>,
}

impl VotePrediction {
    pub fn tie_count(&self) -> usize {
        self.ties.iter().filter(|&&t| t).count()
    }
}

impl VotingModel {
    pub fn new(members: Vec<TrainedEnsemble>, weights: Vec<u32>, tie_break: TieBreak) -> Result<Self> {
        if members.len() != weights.len() {
            return Err(Error::LengthMismatch {
                left: members.len(),
                right: weights.len(),
            });
        }
        if weights.is_empty() || weights.contains(&0) {
            return Err(Error::InvalidConfig("voting weights must be positive".into()));
        }
        let width = members[0].n_features();
        if let Some(m) = members.iter().find(|m| m.n_features() != width) {
            return Err(Error::FeatureCountMismatch {
                expected: width,
                got: m.n_features(),
            });
        }
        Ok(Self {
            members,
            weights,
            tie_break,
        })
    }

    pub fn n_features(&self) -> usize {
        self.members[0].n_features()
    }

    pub fn total_weight(&self) -> u32 {
        self.weights.iter().sum()
    }

    pub fn predict(&self, x: &Matrix) -> Result<VotePrediction> {
        let member_probas = self
            .members
            .iter()
            .map(|m| m.predict_proba(x))
            .collect::<Result<Vec<_>>>()?;
        let member_labels: Vec<Vec<u8>> = member_probas
            .iter()
            .map(|p| p.iter().map(|&v| u8::from(v > 0.5)).collect())
            .collect();
        let mut out = VotePrediction {
            labels: Vec::with_capacity(x.n_rows()),
            scores: Vec::with_capacity(x.n_rows()),
            ties: Vec::with_capacity(x.n_rows()),
            member_labels,
            member_probas,
        };
        let mut row_labels = vec![0u8; self.members.len()];
        for i in 0..x.n_rows() {
            for (slot, labels) in row_labels.iter_mut().zip(&out.member_labels) {
                *slot = labels[i];
            }
            let (label, tie) = vote(&row_labels, &self.weights, self.tie_break)?;
            out.labels.push(label);
            out.ties.push(tie);
            out.scores.push(vote_score(&row_labels, &self.weights)?);
        }
        Ok(out)
    }

    /// Weighted mean of member probabilities; the continuous surrogate explained by SHAP.
    pub fn soft_share_row(&self, row: &[f64]) -> f64 {
        let total = f64::from(self.total_weight());
        self.members
            .iter()
            .zip(&self.weights)
            .map(|(m, &w)| f64::from(w) / total * m.proba_row(row))
            .sum()
    }
}

/// Trains all four members on the same rows. Members run concurrently.
pub fn train_voting(x: &Matrix, y: &[u8], cfg: &VotingConfig) -> Result<VotingModel> {
    cfg.validate()?;
    let yf: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
    let ((xgb, lgbm), (gbdt, bag)) = rayon::join(
        || rayon::join(|| train_xgb(x, &yf, &cfg.xgb), || train_lgbm(x, &yf, &cfg.lgbm)),
        || rayon::join(|| train_gbdt(x, &yf, &cfg.gbdt), || train_bagging(x, y, &cfg.bagging)),
    );
    VotingModel::new(
        vec![
            TrainedEnsemble::Boosted(xgb?),
            TrainedEnsemble::Boosted(lgbm?),
            TrainedEnsemble::Boosted(gbdt?),
            TrainedEnsemble::Bagging(bag?),
        ],
        cfg.weights.to_vec(),
        cfg.tie_break,
    )
}
