use rayon::prelude::*;

use super::{check_background, AttributionResult, ValueKind};
use crate::boost::sigmoid;
use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::tree::{DecisionTree, Node};
use crate::voting::{TrainedEnsemble, VotingModel};

/// `(a - 1)! b! / (a + b)!`, the Shapley weight of a player in a unanimity
/// game over `a` required and `b` forbidden players.
fn unanimity_weight(a: usize, b: usize) -> f64 {
    // 1 / (a * C(a + b, b))
    let mut binom = 1.0;
    for k in 1..=b {
        binom = binom * (a + k) as f64 / k as f64;
    }
    1.0 / (a as f64 * binom)
}

fn check_tree(tree: &DecisionTree, width: usize) -> Result<()> {
    for node in tree.nodes() {
        if let Node::Split { feature, .. } = *node {
            if feature >= width {
                return Err(Error::UnsupportedNode(format!(
                    "split on feature {feature} but rows have {width} features"
                )));
            }
        }
    }
    Ok(())
}

struct Walk<'a> {
    nodes: &'a [Node],
    x: &'a [f64],
    z: &'a [f64],
    scale: f64,
    from_x: Vec<usize>,
    from_z: Vec<usize>,
}

impl Walk<'_> {
    fn visit(&mut self, id: usize, phi: &mut [f64]) {
        match self.nodes[id] {
            Node::Leaf { value, .. } => {
                let (a, b) = (self.from_x.len(), self.from_z.len());
                let v = self.scale * value;
                if a > 0 {
                    let w = v * unanimity_weight(a, b);
                    self.from_x.iter().for_each(|&i| phi[i] += w);
                }
                if b > 0 {
                    let w = v * unanimity_weight(b, a);
                    self.from_z.iter().for_each(|&j| phi[j] -= w);
                }
            }
            Node::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                let gx = if self.x[feature] <= threshold { left } else { right };
                let gz = if self.z[feature] <= threshold { left } else { right };
                if gx == gz || self.from_x.contains(&feature) {
                    self.visit(gx, phi);
                } else if self.from_z.contains(&feature) {
                    self.visit(gz, phi);
                } else {
                    self.from_x.push(feature);
                    self.visit(gx, phi);
                    self.from_x.pop();
                    self.from_z.push(feature);
                    self.visit(gz, phi);
                    self.from_z.pop();
                }
            }
        }
    }
}

/// Adds `scale * phi` of one tree for the single-reference game
/// `v(S) = tree(x_S, z_~S)` into `phi`.
pub fn tree_shap_pair(tree: &DecisionTree, x: &[f64], z: &[f64], scale: f64, phi: &mut [f64]) {
    let mut walk = Walk {
        nodes: tree.nodes(),
        x,
        z,
        scale,
        from_x: Vec::new(),
        from_z: Vec::new(),
    };
    walk.visit(0, phi);
}

/// Interventional TreeSHAP of `offset + scale * sum_k tree_k` at `x`. Returns `(phi, base)`.
pub fn tree_shap(
    trees: &[DecisionTree],
    offset: f64,
    scale: f64,
    x: &[f64],
    background: &Matrix,
) -> Result<(Vec<f64>, f64)> {
    check_background(x, background)?;
    for t in trees {
        check_tree(t, x.len())?;
    }
    let nb = background.n_rows() as f64;
    let mut phi = vec![0.0; x.len()];
    let mut base = 0.0;
    for z in background.rows() {
        for t in trees {
            tree_shap_pair(t, x, z, scale / nb, &mut phi);
            base += scale * t.predict(z) / nb;
        }
    }
    Ok((phi, offset + base))
}

fn raw_output(trees: &[DecisionTree], offset: f64, scale: f64, row: &[f64]) -> f64 {
    offset + scale * trees.iter().map(|t| t.predict(row)).sum::<f64>()
}

/// Slope of the sigmoid between two margins.
fn sigmoid_secant(a: f64, b: f64) -> f64 {
    if (a - b).abs() > 1e-8 {
        (sigmoid(a) - sigmoid(b)) / (a - b)
    } else {
        let p = sigmoid(0.5 * (a + b));
        p * (1.0 - p)
    }
}

/// Attributes one member's output over `rows`.
///
/// `Margin` is available for boosted members only. `Probability` is exact
/// for bagging (already linear in its trees); for boosted members each
/// background pair's margin attribution is rescaled by the sigmoid secant,
/// which keeps local accuracy exact.
pub fn explain_member(
    member: &TrainedEnsemble,
    rows: &Matrix,
    background: &Matrix,
    kind: ValueKind,
) -> Result<AttributionResult> {
    let width = member.n_features();
    for m in [rows, background] {
        if m.n_cols() != width {
            return Err(Error::FeatureCountMismatch {
                expected: width,
                got: m.n_cols(),
            });
        }
    }
    if background.n_rows() == 0 {
        return Err(Error::EmptyBackground);
    }
    let squash = match (kind, member.is_margin_model()) {
        (ValueKind::Margin, true) => false,
        (ValueKind::Probability, margin) => margin,
        _ => {
            return Err(Error::InvalidConfig(format!(
                "{kind:?} output is not defined for a {} member",
                member.family_name()
            )))
        }
    };
    let trees = member.trees();
    for t in trees {
        check_tree(t, width)?;
    }
    let (offset, scale) = member.additive_form();
    let out = |raw: f64| if squash { sigmoid(raw) } else { raw };
    let bg_raw: Vec<f64> = background.rows().map(|z| raw_output(trees, offset, scale, z)).collect();
    let nb = background.n_rows() as f64;
    let base_value = bg_raw.iter().map(|&r| out(r)).sum::<f64>() / nb;

    let per_row: Vec<(Vec<f64>, f64)> = (0..rows.n_rows())
        .into_par_iter()
        .map(|i| {
            let x = rows.row(i);
            let fx = raw_output(trees, offset, scale, x);
            let mut phi = vec![0.0; width];
            let mut pair = vec![0.0; width];
            for (z, &fz) in background.rows().zip(&bg_raw) {
                pair.iter_mut().for_each(|p| *p = 0.0);
                for t in trees {
                    tree_shap_pair(t, x, z, scale, &mut pair);
                }
                let factor = if squash { sigmoid_secant(fx, fz) } else { 1.0 } / nb;
                for (p, q) in phi.iter_mut().zip(&pair) {
                    *p += factor * q;
                }
            }
            (phi, out(fx))
        })
        .collect();
    let (phi, model_output) = per_row.into_iter().unzip();
    Ok(AttributionResult {
        base_value,
        phi,
        model_output,
        value_kind: kind,
    })
}

/// Attribution of the weighted mean of member probabilities, the continuous
/// surrogate of the hard vote.
pub fn explain_voting(model: &VotingModel, rows: &Matrix, background: &Matrix) -> Result<AttributionResult> {
    let members = model
        .members
        .iter()
        .map(|m| explain_member(m, rows, background, ValueKind::Probability))
        .collect::<Result<Vec<_>>>()?;
    combine_vote_share(&members, &model.weights)
}

/// `sum_m (w_m / W) * attr_m`, tagged as a vote share.
pub fn combine_vote_share(members: &[AttributionResult], weights: &[u32]) -> Result<AttributionResult> {
    if members.len() != weights.len() || members.is_empty() {
        return Err(Error::LengthMismatch {
            left: members.len(),
            right: weights.len(),
        });
    }
    let total = f64::from(weights.iter().sum::<u32>());
    let shares: Vec<f64> = weights.iter().map(|&w| f64::from(w) / total).collect();
    let first = &members[0];
    let mut acc = AttributionResult {
        base_value: 0.0,
        phi: vec![vec![0.0; first.n_features()]; first.phi.len()],
        model_output: vec![0.0; first.model_output.len()],
        value_kind: ValueKind::VoteShare,
    };
    for (attr, &share) in members.iter().zip(&shares) {
        acc.base_value += share * attr.base_value;
        for (a, b) in acc.phi.iter_mut().zip(&attr.phi) {
            for (p, q) in a.iter_mut().zip(b) {
                *p += share * q;
            }
        }
        for (o, q) in acc.model_output.iter_mut().zip(&attr.model_output) {
            *o += share * q;
        }
    }
    Ok(acc)
}
