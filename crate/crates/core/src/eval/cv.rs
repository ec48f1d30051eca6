use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{confusion, fold_mean, metrics, roc_and_auc, MeanMetrics, MetricsReport, RocCurve};
use crate::data::{Dataset, FoldAssignment, Grouping};
use crate::error::{Error, Result};
use crate::select::{apply_mask, correlation_report, correlation_report_on_rows, FeatureMask, ThresholdRule};
use crate::voting::{train_voting, VotingConfig, VotingModel, MEMBER_NAMES};

/// Row order of every per-model table: the four members, then the vote.
pub const MODEL_NAMES: [&str; 5] = ["XGB", "LGBM", "GBDT", "Bagging", "Voting"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    pub threshold: f64,
    #[serde(default)]
    pub rule: ThresholdRule,
    /// Recompute the mask on each training fold instead of once on all rows.
    #[serde(default)]
    pub inside_folds: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            threshold: 0.47,
            rule: ThresholdRule::Strict,
            inside_folds: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub selection: SelectionConfig,
    pub voting: VotingConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.selection.threshold.is_finite() || self.selection.threshold < 0.0 {
            return Err(Error::InvalidConfig("selection threshold must be a finite, non-negative number".into()));
        }
        self.voting.validate()
    }

    /// Mask on the given rows (all rows when `None`).
    pub fn mask(&self, ds: &Dataset, rows: Option<&[usize]>) -> Result<FeatureMask> {
        let s = &self.selection;
        let report = match rows {
            Some(r) => correlation_report_on_rows(ds, Some(r), s.threshold, s.rule)?,
            None => correlation_report(ds, s.threshold, s.rule)?,
        };
        let mask = report.mask();
        if mask.is_empty() {
            return Err(Error::EmptyFeatureSet);
        }
        Ok(mask)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCv {
    pub name: String,
    pub folds: Vec<MetricsReport>,
    pub fold_mean: MeanMetrics,
    /// Metrics of the summed fold matrices.
    pub pooled: MetricsReport,
    /// ROC of the pooled out-of-fold scores.
    pub roc: RocCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub grouping: Grouping,
    pub seed: u64,
    pub fold_sizes: Vec<usize>,
    pub selected_features: Vec<Vec<String>>,
    pub models: Vec<ModelCv>,
    /// Rows per fold where the vote was tied.
    pub ties_per_fold: Vec<usize>,
    pub total_ties: usize,
}

impl CvReport {
    pub fn model(&self, name: &str) -> Option<&ModelCv> {
        self.models.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub model: String,
    pub row: usize,
    pub subject: String,
    pub replication: u8,
    pub truth: u8,
    pub predicted: u8,
    pub score: f64,
    pub fold: usize,
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldModel {
    pub fold: usize,
    pub feature_names: Vec<String>,
    pub model: VotingModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub report: CvReport,
    pub predictions: Vec<PredictionRow>,
    pub models: Vec<FoldModel>,
}

struct FoldRun {
    test: Vec<usize>,
    /// Per model name: labels and scores over `test`.
    labels: Vec<Vec<u8>>,
    scores: Vec<Vec<f64>>,
    ties: Vec<bool>,
    model: FoldModel,
}

fn run_fold(ds: &Dataset, cfg: &PipelineConfig, folds: &FoldAssignment, fold: usize, global: Option<&FeatureMask>) -> Result<FoldRun> {
    let (train, test) = folds.split(fold);
    let mask = match global {
        Some(m) => m.clone(),
        None => cfg.mask(ds, Some(&train))?,
    };
    let reduced = apply_mask(ds, &mask)?;
    let x = reduced.feature_matrix();
    let labels = reduced.labels();
    let y_train: Vec<u8> = train.iter().map(|&r| labels[r]).collect();
    let mut model = train_voting(&x.select_rows(&train), &y_train, &cfg.voting)?;
    let names = reduced.feature_names();
    for m in &mut model.members {
        m.set_feature_names(names.clone());
    }
    let pred = model.predict(&x.select_rows(&test))?;
    let mut all_labels = pred.member_labels.clone();
    all_labels.push(pred.labels.clone());
    let mut all_scores = pred.member_probas.clone();
    all_scores.push(pred.scores.clone());
    Ok(FoldRun {
        test,
        labels: all_labels,
        scores: all_scores,
        ties: pred.ties,
        model: FoldModel {
            fold,
            feature_names: names,
            model,
        },
    })
}

/// Trains and evaluates the full pipeline once per fold. Folds run concurrently;
/// results are assembled in fold order.
pub fn cross_validate(ds: &Dataset, cfg: &PipelineConfig, folds: &FoldAssignment) -> Result<CvOutcome> {
    cfg.validate()?;
    if folds.fold_of_row.len() != ds.len() {
        return Err(Error::LengthMismatch {
            left: folds.fold_of_row.len(),
            right: ds.len(),
        });
    }
    debug_assert_eq!(MEMBER_NAMES, MODEL_NAMES[..4]);
    let global = if cfg.selection.inside_folds {
        None
    } else {
        Some(cfg.mask(ds, None)?)
    };
    let runs = (0..folds.k)
        .into_par_iter()
        .map(|f| run_fold(ds, cfg, folds, f, global.as_ref()))
        .collect::<Result<Vec<_>>>()?;

    let truth = ds.labels();
    let samples = ds.samples();
    let mut predictions = Vec::new();
    let mut models = Vec::new();
    for (m, name) in MODEL_NAMES.iter().enumerate() {
        let mut fold_reports = Vec::with_capacity(folds.k);
        let (mut pooled_truth, mut pooled_scores) = (Vec::new(), Vec::new());
        for (f, run) in runs.iter().enumerate() {
            let y: Vec<u8> = run.test.iter().map(|&r| truth[r]).collect();
            fold_reports.push(metrics(&confusion(&y, &run.labels[m])?));
            pooled_truth.extend_from_slice(&y);
            pooled_scores.extend_from_slice(&run.scores[m]);
            for (i, &r) in run.test.iter().enumerate() {
                predictions.push(PredictionRow {
                    model: name.to_string(),
                    row: r,
                    subject: samples[r].subject_id.clone(),
                    replication: samples[r].replication,
                    truth: truth[r],
                    predicted: run.labels[m][i],
                    score: run.scores[m][i],
                    fold: f,
                    tie: *name == "Voting" && run.ties[i],
                });
            }
        }
        let pooled_cm = fold_reports.iter().map(|r| r.source).sum();
        models.push(ModelCv {
            name: name.to_string(),
            fold_mean: fold_mean(&fold_reports),
            pooled: metrics(&pooled_cm),
            roc: roc_and_auc(&pooled_scores, &pooled_truth)?,
            folds: fold_reports,
        });
    }
    let ties_per_fold: Vec<usize> = runs.iter().map(|r| r.ties.iter().filter(|&&t| t).count()).collect();
    let report = CvReport {
        k: folds.k,
        grouping: folds.grouping,
        seed: folds.seed,
        fold_sizes: folds.fold_sizes(),
        selected_features: runs.iter().map(|r| r.model.feature_names.clone()).collect(),
        models,
        total_ties: ties_per_fold.iter().sum(),
        ties_per_fold,
    };
    Ok(CvOutcome {
        report,
        predictions,
        models: runs.into_iter().map(|r| r.model).collect(),
    })
}

pub fn predictions_csv(rows: &[PredictionRow]) -> String {
    let mut out = String::from("model,subject,replication,true,predicted,score,fold,tie\n");
    for p in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            p.model, p.subject, p.replication, p.truth, p.predicted, p.score, p.fold, p.tie
        )
        .unwrap();
    }
    out
}

pub fn roc_csv(report: &CvReport) -> String {
    let mut out = String::from("model,fpr,tpr,threshold\n");
    for m in &report.models {
        for p in &m.roc.points {
            writeln!(out, "{},{},{},{}", m.name, p.fpr, p.tpr, p.threshold).unwrap();
        }
    }
    out
}
