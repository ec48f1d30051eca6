use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Gradient-based one-side sampling fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GossParams {
    /// Fraction of rows with the largest |g| that is always kept.
    pub top_rate: f64,
    /// Fraction of all rows drawn from the remainder.
    pub other_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GossSample {
    /// Ascending row indices.
    pub rows: Vec<usize>,
    /// Multiplier for each row's (g, h), aligned with `rows`.
    pub weights: Vec<f64>,
}

fn ceil_count(rate: f64, n: usize) -> usize {
    // tolerate representation error in products like 0.2 * 100
    ((rate * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Keeps the `ceil(a n)` largest-|g| rows at weight 1 and draws `ceil(b n)`
/// of the rest uniformly without replacement at weight `(1 - a) / b`.
pub fn goss_sample(abs_grads: &[f64], top_rate: f64, other_rate: f64, seed: u64) -> GossSample {
    let n = abs_grads.len();
    let n_top = ceil_count(top_rate, n).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| abs_grads[j].total_cmp(&abs_grads[i]).then(i.cmp(&j)));
    let (top, rest) = order.split_at(n_top);
    let mut rest = rest.to_vec();
    rest.sort_unstable();

    let n_other = ceil_count(other_rate, n).min(rest.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, rest.len(), n_other);
    let amplify = if other_rate > 0.0 {
        (1.0 - top_rate) / other_rate
    } else {
        0.0
    };

    let mut chosen: Vec<(usize, f64)> = top.iter().map(|&r| (r, 1.0)).collect();
    chosen.extend(picked.iter().map(|i| (rest[i], amplify)));
    chosen.sort_unstable_by_key(|&(r, _)| r);
    GossSample {
        rows: chosen.iter().map(|&(r, _)| r).collect(),
        weights: chosen.iter().map(|&(_, w)| w).collect(),
    }
}
