//! Per-sample losses and their derivatives with respect to the prediction.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "loss")]
pub enum Loss {
    /// `(f - y)^2 / 2`
    Squared,
    /// `rho_tau(y - f)`
    Pinball { tau: f64 },
    /// `ln(1 + exp(-y f))` with `y` in `{-1, +1}`
    Logistic,
}

impl Loss {
    pub fn value(self, f: f64, y: f64) -> f64 {
        match self {
            Loss::Squared => 0.5 * (f - y) * (f - y),
            Loss::Pinball { tau } => pinball(y - f, tau),
            Loss::Logistic => softplus(-y * f),
        }
    }

    /// d loss / d f. At a zero pinball residual the subgradient
    /// `tau - 1(r < 0) = tau` is used.
    pub fn derivative(self, f: f64, y: f64) -> f64 {
        match self {
            Loss::Squared => f - y,
            Loss::Pinball { tau } => {
                let r = y - f;
                -(tau - if r < 0.0 { 1.0 } else { 0.0 })
            }
            Loss::Logistic => -y * sigmoid(-y * f),
        }
    }
}

/// Check loss `u (tau - 1(u < 0))`.
pub fn pinball(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        u * (tau - 1.0)
    } else {
        u * tau
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z + (-z).exp()
    } else {
        z.exp().ln_1p()
    }
}

/// Lower weighted `tau`-quantile: the smallest `v` with
/// `sum{w_i : v_i <= v} >= tau * sum(w)`.
pub fn weighted_quantile(values: &[f64], weights: Option<&[f64]>, tau: f64) -> f64 {
    debug_assert!(!values.is_empty());
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let total: f64 = (0..values.len()).map(w).sum();
    let target = tau * total;
    let mut acc = 0.0;
    for &i in &order {
        acc += w(i);
        // relative slack absorbs summation rounding at exact boundaries
        if acc >= target * (1.0 - 1e-12) && w(i) > 0.0 {
            return values[i];
        }
    }
    values[*order.last().expect("non-empty")]
}

/// Weighted 0-1 classification loss `n^-1 sum w_i 1(l_i f_i < 0)`; a zero
/// score counts as a half error.
pub fn weighted_zero_one(scores: &[f64], labels: &[f64], weights: &[f64]) -> f64 {
    let n = scores.len() as f64;
    scores
        .iter()
        .zip(labels)
        .zip(weights)
        .map(|((f, l), w)| {
            let m = f * l;
            if m < 0.0 {
                *w
            } else if m == 0.0 {
                0.5 * w
            } else {
                0.0
            }
        })
        .sum::<f64>()
        / n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinball_values() {
        assert_eq!(pinball(2.0, 0.25), 0.5);
        assert_eq!(pinball(-2.0, 0.25), 1.5);
        assert_eq!(pinball(0.0, 0.25), 0.0);
    }

    #[test]
    fn pinball_kink_uses_tau() {
        let l = Loss::Pinball { tau: 0.3 };
        assert_eq!(l.derivative(1.0, 1.0), -0.3);
        assert_eq!(l.derivative(2.0, 1.0), 0.7);
    }

    #[test]
    fn lower_quantile_of_one_to_hundred() {
        let y: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(weighted_quantile(&y, None, 0.25), 25.0);
        assert_eq!(weighted_quantile(&y, None, 0.5), 50.0);
        assert_eq!(weighted_quantile(&y, None, 0.251), 26.0);
        let w = vec![2.0; 100];
        assert_eq!(weighted_quantile(&y, Some(&w), 0.25), 25.0);
    }

    #[test]
    fn zero_weight_points_are_skipped() {
        let v = [1.0, 2.0, 3.0];
        let w = [0.0, 1.0, 1.0];
        assert_eq!(weighted_quantile(&v, Some(&w), 0.1), 2.0);
    }

    #[test]
    fn stable_logistic() {
        assert!((softplus(800.0) - 800.0).abs() < 1e-9);
        assert!(softplus(-800.0) >= 0.0);
        assert!((sigmoid(-800.0)).abs() < 1e-300);
        assert!(Loss::Logistic.derivative(1000.0, -1.0).is_finite());
    }

    #[test]
    fn zero_one_counts_weighted_errors() {
        let l = weighted_zero_one(&[1.0, -1.0, 0.0], &[1.0, 1.0, 1.0], &[5.0, 3.0, 2.0]);
        assert!((l - (3.0 + 1.0) / 3.0).abs() < 1e-12);
    }
}
