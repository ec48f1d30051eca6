use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::GradPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Binomial log-loss on the margin; labels in {0, 1}.
    #[default]
    Logistic,
    /// Half squared error; used for regression-style checks of first-order boosting.
    SquaredError,
}

impl Objective {
    pub fn grad_hess(self, target: f64, margin: f64) -> GradPair {
        match self {
            Objective::Logistic => logistic_grad_hess(target, margin),
            Objective::SquaredError => GradPair {
                g: margin - target,
                h: 1.0,
            },
        }
    }

    pub fn loss(self, target: f64, margin: f64) -> f64 {
        match self {
            Objective::Logistic => logistic_loss(target, margin),
            Objective::SquaredError => 0.5 * (margin - target).powi(2),
        }
    }

    /// Margin corresponding to an initial prediction `base_score`.
    pub fn base_margin(self, base_score: f64) -> f64 {
        match self {
            Objective::Logistic => (base_score / (1.0 - base_score)).ln(),
            Objective::SquaredError => base_score,
        }
    }
}

pub fn sigmoid(margin: f64) -> f64 {
    if margin >= 0.0 {
        1.0 / (1.0 + (-margin).exp())
    } else {
        let e = margin.exp();
        e / (1.0 + e)
    }
}

/// `-[y ln p + (1-y) ln(1-p)]` with `p = sigmoid(margin)`, computed stably.
pub fn logistic_loss(label: f64, margin: f64) -> f64 {
    // softplus(m) - y m
    let softplus = if margin > 0.0 {
        margin + (-margin).exp().ln_1p()
    } else {
        margin.exp().ln_1p()
    };
    softplus - label * margin
}

/// `g = p - y`, `h = p (1 - p)`.
pub fn logistic_grad_hess(label: f64, margin: f64) -> GradPair {
    let p = sigmoid(margin);
    GradPair {
        g: p - label,
        h: p * (1.0 - p),
    }
}

/// Minimizer of `G w + (H + lambda) w^2 / 2`.
pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> Result<f64> {
    let denom = h + lambda;
    if !(denom > 0.0) {
        return Err(Error::DegenerateDenominator(denom));
    }
    Ok(-g / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_at_zero_margin() {
        assert_eq!(logistic_grad_hess(1.0, 0.0), GradPair { g: -0.5, h: 0.25 });
        assert_eq!(logistic_grad_hess(0.0, 0.0), GradPair { g: 0.5, h: 0.25 });
    }

    #[test]
    fn saturation() {
        let p = logistic_grad_hess(1.0, 20.0);
        assert!(p.g.abs() < 1e-8 && p.h.abs() < 1e-8);
        let p = logistic_grad_hess(0.0, -800.0);
        assert!(p.g.abs() < 1e-300 && p.h >= 0.0);
    }

    #[test]
    fn gradient_range() {
        for i in -100..=100 {
            let m = i as f64 * 0.2;
            for y in [0.0, 1.0] {
                let p = logistic_grad_hess(y, m);
                assert!(p.g > -1.0 && p.g < 1.0);
                assert!(p.h > 0.0 && p.h <= 0.25);
            }
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        let step = 1e-6;
        for i in 0..=200 {
            let m = -10.0 + 0.1 * i as f64;
            for y in [0.0, 1.0] {
                let p = logistic_grad_hess(y, m);
                let fd_g = (logistic_loss(y, m + step) - logistic_loss(y, m - step)) / (2.0 * step);
                let fd_h = (logistic_grad_hess(y, m + step).g - logistic_grad_hess(y, m - step).g)
                    / (2.0 * step);
                assert!((fd_g - p.g).abs() <= 1e-6 * p.g.abs().max(1e-3), "g at {m}: {fd_g} vs {}", p.g);
                assert!((fd_h - p.h).abs() <= 1e-6 * p.h.abs().max(1e-3), "h at {m}: {fd_h} vs {}", p.h);
            }
        }
    }

    #[test]
    fn leaf_weight_closed_form() {
        assert_eq!(leaf_weight(2.0, 3.0, 1.0).unwrap(), -0.5);
        assert_eq!(leaf_weight(0.0, 3.0, 1.0).unwrap(), 0.0);
        assert_eq!(leaf_weight(-3.0, 1.0, 0.5).unwrap(), 2.0);
        assert!(leaf_weight(5.0, 1.0, 1e300).unwrap().abs() < 1e-290);
        assert!(matches!(
            leaf_weight(1.0, 0.0, 0.0),
            Err(Error::DegenerateDenominator(_))
        ));
    }

    #[test]
    fn leaf_weight_minimizes_quadratic() {
        for &(g, h, l) in &[(2.0, 3.0, 1.0), (-1.5, 0.7, 0.0), (0.3, 2.0, 5.0)] {
            let w = leaf_weight(g, h, l).unwrap();
            let q = |w: f64| g * w + 0.5 * (h + l) * w * w;
            assert!((g + (h + l) * w).abs() <= 1e-15);
            assert!(q(w) <= q(w + 1e-3) && q(w) <= q(w - 1e-3));
        }
    }
}
