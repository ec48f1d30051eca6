use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Per-feature mean and population standard deviation from a training partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Fits on `rows` only; other rows are never read.
pub fn fit_scaling(ds: &Dataset, rows: &[usize]) -> Result<ScalingParams> {
    if rows.is_empty() {
        return Err(Error::InvalidConfig("scaling needs at least one row".into()));
    }
    let n = rows.len() as f64;
    let p = ds.n_features();
    let samples = ds.samples();
    let mut mean = vec![0.0; p];
    for &r in rows {
        for (m, v) in mean.iter_mut().zip(&samples[r].features) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; p];
    for &r in rows {
        for ((acc, v), m) in var.iter_mut().zip(&samples[r].features).zip(&mean) {
            *acc += (v - m) * (v - m);
        }
    }
    let sd: Vec<f64> = var.iter().map(|v| (v / n).sqrt()).collect();
    if let Some(j) = sd.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::ConstantFeature(ds.specs()[j].name.clone()));
    }
    Ok(ScalingParams { mean, sd })
}

pub fn apply_scaling(ds: &Dataset, params: &ScalingParams) -> Result<Dataset> {
    if params.mean.len() != ds.n_features() {
        return Err(Error::FeatureCountMismatch {
            expected: params.mean.len(),
            got: ds.n_features(),
        });
    }
    Ok(ds.map_features(|j, v| (v - params.mean[j]) / params.sd[j]))
}
