use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Unit that is kept together when assigning folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// All replications of a subject share a fold.
    #[default]
    BySubject,
    ByRow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub grouping: Grouping,
    pub seed: u64,
    /// Fold index of every dataset row.
    pub fold_of_row: Vec<usize>,
}

impl FoldAssignment {
    /// Row indices (ascending) of the held-out fold and of its complement.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let (test, train): (Vec<_>, Vec<_>) =
            (0..self.fold_of_row.len()).partition(|&r| self.fold_of_row[r] == fold);
        (train, test)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of_row {
            sizes[f] += 1;
        }
        sizes
    }

    /// Subject → fold map. Only meaningful for [`Grouping::BySubject`];
    /// under row grouping a subject may map to several folds and the last wins.
    pub fn fold_of_subject(&self, ds: &Dataset) -> BTreeMap<String, usize> {
        ds.samples()
            .iter()
            .zip(&self.fold_of_row)
            .map(|(s, &f)| (s.subject_id.clone(), f))
            .collect()
    }
}

/// Shuffles grouping units with a seeded ChaCha8 stream and deals them
/// round-robin into `k` folds, so fold sizes differ by at most one unit.
pub fn assign_folds(ds: &Dataset, k: usize, grouping: Grouping, seed: u64) -> Result<FoldAssignment> {
    let unit_of_row: Vec<usize> = match grouping {
        Grouping::ByRow => (0..ds.len()).collect(),
        Grouping::BySubject => {
            let order: BTreeMap<&str, usize> = ds
                .subjects()
                .into_iter()
                .enumerate()
                .map(|(i, s)| (s, i))
                .collect();
            ds.samples()
                .iter()
                .map(|s| order[s.subject_id.as_str()])
                .collect()
        }
    };
    let n_units = unit_of_row.iter().max().map_or(0, |m| m + 1);
    if k < 2 || k > n_units {
        return Err(Error::TooFewUnits { k, units: n_units });
    }
    let mut units: Vec<usize> = (0..n_units).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    units.shuffle(&mut rng);
    let mut fold_of_unit = vec![0; n_units];
    for (pos, &u) in units.iter().enumerate() {
        fold_of_unit[u] = pos % k;
    }
    Ok(FoldAssignment {
        k,
        grouping,
        seed,
        fold_of_row: unit_of_row.iter().map(|&u| fold_of_unit[u]).collect(),
    })
}
