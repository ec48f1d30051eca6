//! Pearson-correlation screening of features against the binary label.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Two-pass Pearson correlation, clamped to [-1, 1].
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::ZeroVariance(None));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance(None));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// How `|r|` is compared to the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// `|r| > threshold`
    #[default]
    Strict,
    /// `|r| >= threshold`
    Inclusive,
}

impl ThresholdRule {
    pub fn admits(self, r: f64, threshold: f64) -> bool {
        match self {
            Self::Strict => r.abs() > threshold,
            Self::Inclusive => r.abs() >= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub name: String,
    pub r: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub threshold: f64,
    pub rule: ThresholdRule,
    /// In dataset feature order.
    pub entries: Vec<CorrelationEntry>,
}

impl CorrelationReport {
    pub fn selected_count(&self) -> usize {
        self.entries.iter().filter(|e| e.selected).count()
    }

    pub fn mask(&self) -> FeatureMask {
        FeatureMask {
            indices: self
                .entries
                .iter()
                .enumerate()
                .filter(|(_, e)| e.selected)
                .map(|(i, _)| i)
                .collect(),
            threshold: self.threshold,
        }
    }

    /// Entry indices sorted by descending `|r|`, ties by position.
    pub fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.entries.len()).collect();
        idx.sort_by(|&a, &b| {
            self.entries[b]
                .r
                .abs()
                .total_cmp(&self.entries[a].r.abs())
                .then(a.cmp(&b))
        });
        idx
    }

    /// `feature,r,abs_r,selected` rows for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,r,abs_r,selected\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{},{}\n", e.name, e.r, e.r.abs(), e.selected));
        }
        out
    }
}

/// Retained feature indices in original order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMask {
    pub indices: Vec<usize>,
    pub threshold: f64,
}

impl FeatureMask {
    pub fn all(n_features: usize) -> Self {
        Self {
            indices: (0..n_features).collect(),
            threshold: 0.0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }
}

/// Correlates every feature column of `ds` with the label.
pub fn correlation_report(ds: &Dataset, threshold: f64, rule: ThresholdRule) -> Result<CorrelationReport> {
    correlation_report_on_rows(ds, None, threshold, rule)
}

/// As [`correlation_report`] but restricted to `rows` when given.
pub fn correlation_report_on_rows(
    ds: &Dataset,
    rows: Option<&[usize]>,
    threshold: f64,
    rule: ThresholdRule,
) -> Result<CorrelationReport> {
    let all: Vec<usize>;
    let rows = match rows {
        Some(r) => r,
        None => {
            all = (0..ds.len()).collect();
            &all
        }
    };
    let samples = ds.samples();
    let y: Vec<f64> = rows.iter().map(|&r| f64::from(samples[r].label)).collect();
    let entries = ds
        .specs()
        .iter()
        .enumerate()
        .map(|(j, spec)| {
            let x: Vec<f64> = rows.iter().map(|&r| samples[r].features[j]).collect();
            let r = pearson(&x, &y).map_err(|e| match e {
                Error::ZeroVariance(_) => Error::ZeroVariance(Some(spec.name.clone())),
                other => other,
            })?;
            Ok(CorrelationEntry {
                name: spec.name.clone(),
                r,
                selected: rule.admits(r, threshold),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationReport {
        threshold,
        rule,
        entries,
    })
}

/// Restricts `ds` to the mask's columns.
pub fn apply_mask(ds: &Dataset, mask: &FeatureMask) -> Result<Dataset> {
    if mask.indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "mask indices must be strictly increasing".into(),
        ));
    }
    ds.select_columns(&mask.indices)
}
