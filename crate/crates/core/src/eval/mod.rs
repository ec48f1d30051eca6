//! Confusion matrices, classification metrics, ROC curves and cross-validation.

mod cv;

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cv::{
    cross_validate, predictions_csv, roc_csv, CvOutcome, CvReport, FoldModel, ModelCv, PipelineConfig,
    PredictionRow, SelectionConfig, MODEL_NAMES,
};

/// Counts with class 1 as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }
}

impl Add for ConfusionMatrix {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl AddAssign for ConfusionMatrix {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl std::iter::Sum for ConfusionMatrix {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

fn check_binary(v: &[u8]) -> Result<()> {
    match v.iter().find(|&&l| l > 1) {
        Some(&bad) => Err(Error::NonBinary(bad)),
        None => Ok(()),
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::InvalidConfig("no predictions to evaluate".into()));
    }
    check_binary(y_true)?;
    check_binary(y_pred)?;
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            _ => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// Metric values; `None` where a denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: Option<f64>,
    pub source: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Harmonic mean of sensitivity and precision.
pub fn f1_score(sensitivity: f64, precision: f64) -> Option<f64> {
    let sum = sensitivity + precision;
    (sum > 0.0).then(|| 2.0 * sensitivity * precision / sum)
}

pub fn metrics(cm: &ConfusionMatrix) -> MetricsReport {
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let sensitivity = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = match (sensitivity, precision) {
        (Some(s), Some(p)) => f1_score(s, p),
        _ => None,
    };
    MetricsReport {
        precision,
        sensitivity,
        specificity: ratio(cm.tn, cm.tn + cm.fp),
        f1,
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        source: *cm,
    }
}

/// Per-metric means over folds. A metric is `None` when any fold leaves it undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub precision: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: Option<f64>,
}

pub fn fold_mean(reports: &[MetricsReport]) -> MeanMetrics {
    let mean = |get: fn(&MetricsReport) -> Option<f64>| -> Option<f64> {
        let vals: Option<Vec<f64>> = reports.iter().map(get).collect();
        vals.filter(|v| !v.is_empty())
            .map(|v| v.iter().sum::<f64>() / v.len() as f64)
    };
    MeanMetrics {
        precision: mean(|r| r.precision),
        sensitivity: mean(|r| r.sensitivity),
        specificity: mean(|r| r.specificity),
        f1: mean(|r| r.f1),
        accuracy: mean(|r| r.accuracy),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores `>= threshold` are called positive; `inf` for the origin
    /// (written as JSON `null`).
    #[serde(with = "inf_as_null")]
    pub threshold: f64,
}

mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Threshold sweep over distinct scores, descending; tied scores form one step.
pub fn roc_and_auc(scores: &[f64], y_true: &[u8]) -> Result<RocCurve> {
    if scores.len() != y_true.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: y_true.len(),
        });
    }
    check_binary(y_true)?;
    let pos = y_true.iter().filter(|&&l| l == 1).count() as f64;
    let neg = y_true.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if y_true[order[i]] == 1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        let prev = points.last().unwrap();
        let (fpr, tpr) = (fp / neg, tp / pos);
        auc += (fpr - prev.fpr) * (tpr + prev.tpr) / 2.0;
        points.push(RocPoint { fpr, tpr, threshold });
    }
    Ok(RocCurve { points, auc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roc_json_round_trip_keeps_infinite_origin() {
        let roc = roc_and_auc(&[0.9, 0.2, 0.6, 0.6], &[1, 0, 1, 0]).unwrap();
        let text = serde_json::to_string(&roc).unwrap();
        let back: RocCurve = serde_json::from_str(&text).unwrap();
        assert_eq!(back, roc);
        assert_eq!(back.points[0].threshold, f64::INFINITY);
    }

    /// P(score+ > score-) + P(score+ = score-) / 2 by pair counting.
    fn mann_whitney(scores: &[f64], y: &[u8]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (i, &si) in scores.iter().enumerate() {
            for (j, &sj) in scores.iter().enumerate() {
                if y[i] == 1 && y[j] == 0 {
                    den += 1.0;
                    if si > sj {
                        num += 1.0;
                    } else if si == sj {
                        num += 0.5;
                    }
                }
            }
        }
        num / den
    }

    #[test]
    fn confusion_examples() {
        assert_eq!(confusion(&[1, 0], &[1, 0]).unwrap(), ConfusionMatrix { tp: 1, tn: 1, fp: 0, fn_: 0 });
        assert_eq!(confusion(&[1, 1, 0, 0], &[0, 0, 1, 1]).unwrap(), ConfusionMatrix { tp: 0, tn: 0, fp: 2, fn_: 2 });
        assert!(matches!(confusion(&[1], &[1, 0]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(confusion(&[2], &[1]), Err(Error::NonBinary(2))));
    }

    #[test]
    fn metric_examples() {
        let m = metrics(&ConfusionMatrix { tp: 100, tn: 105, fp: 15, fn_: 20 });
        assert_eq!(m.accuracy, Some(205.0 / 240.0));
        let perfect = metrics(&ConfusionMatrix { tp: 1, tn: 1, fp: 0, fn_: 0 });
        for v in [perfect.precision, perfect.sensitivity, perfect.specificity, perfect.f1, perfect.accuracy] {
            assert_eq!(v, Some(1.0));
        }
        // 2 * 0.8320 * 0.8677 / 1.6997, evaluated by hand to 7 places
        assert!((f1_score(0.8320, 0.8677).unwrap() - 0.8494751).abs() < 1e-7);
        assert_eq!(f1_score(0.0, 0.0), None);
    }

    #[test]
    fn undefined_metrics_are_none() {
        let m = metrics(&ConfusionMatrix { tp: 0, tn: 5, fp: 0, fn_: 0 });
        assert_eq!(m.precision, None);
        assert_eq!(m.sensitivity, None);
        assert_eq!(m.f1, None);
        assert_eq!(m.specificity, Some(1.0));
        let mean = fold_mean(&[m, metrics(&ConfusionMatrix { tp: 1, tn: 1, fp: 0, fn_: 0 })]);
        assert_eq!(mean.precision, None);
        assert_eq!(mean.accuracy, Some(1.0));
    }

    #[test]
    fn roc_edge_cases() {
        let perfect = roc_and_auc(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).unwrap();
        assert_eq!(perfect.auc, 1.0);
        let flat = roc_and_auc(&[0.5; 6], &[1, 0, 1, 0, 1, 0]).unwrap();
        assert_eq!(flat.auc, 0.5);
        assert_eq!(flat.points.len(), 2);
        assert_eq!((flat.points[1].fpr, flat.points[1].tpr), (1.0, 1.0));
        assert!(matches!(roc_and_auc(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClass)));
    }

    #[test]
    fn auc_equals_pair_statistic_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let n = rng.gen_range(2..=30);
            let mut y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
            y[0] = 1;
            y[1] = 0;
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..8) as f64 / 8.0).collect();
            let roc = roc_and_auc(&scores, &y).unwrap();
            assert!((roc.auc - mann_whitney(&scores, &y)).abs() <= 1e-12);
        }
    }

    fn matrices() -> impl Strategy<Value = ConfusionMatrix> {
        (0u64..200, 0u64..200, 0u64..200, 0u64..200).prop_map(|(tp, fp, tn, fn_)| ConfusionMatrix { tp, fp, tn, fn_ })
    }

    proptest! {
        #[test]
        fn accuracy_is_class_weighted_recall(cm in matrices()) {
            let m = metrics(&cm);
            if let (Some(sens), Some(spec), Some(acc)) = (m.sensitivity, m.specificity, m.accuracy) {
                let (p, n) = (cm.positives() as f64, cm.negatives() as f64);
                prop_assert!((acc - (sens * p + spec * n) / (p + n)).abs() <= 1e-12);
            }
        }

        #[test]
        fn f1_is_a_harmonic_mean(cm in matrices()) {
            let m = metrics(&cm);
            if let (Some(s), Some(p), Some(f1)) = (m.sensitivity, m.precision, m.f1) {
                prop_assert!(f1 <= s.max(p) + 1e-12 && f1 >= s.min(p) - 1e-12);
                prop_assert_eq!(f1 == 1.0, s == 1.0 && p == 1.0);
            }
        }

        #[test]
        fn roc_is_monotone_and_its_area_is_the_trapezoid(
            pairs in prop::collection::vec((0u8..10, 0u8..=1), 2..40)
        ) {
            let scores: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
            let y: Vec<u8> = pairs.iter().map(|p| p.1).collect();
            let Ok(roc) = roc_and_auc(&scores, &y) else { return Ok(()) };
            let first = &roc.points[0];
            let last = roc.points.last().unwrap();
            prop_assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
            prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
            let mut area = 0.0;
            for w in roc.points.windows(2) {
                prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
                area += (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0;
            }
            prop_assert!((area - roc.auc).abs() <= 1e-12);

            // strictly increasing transform
            let warped: Vec<f64> = scores.iter().map(|s| (s * 0.7).exp() - 3.0).collect();
            let other = roc_and_auc(&warped, &y).unwrap();
            prop_assert_eq!(other.auc, roc.auc);
            let coords = |r: &RocCurve| r.points.iter().map(|p| (p.fpr, p.tpr)).collect::<Vec<_>>();
            prop_assert_eq!(coords(&other), coords(&roc));
        }
    }
}
