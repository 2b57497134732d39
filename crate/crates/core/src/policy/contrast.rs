use crate::data::{Action, Dataset};
use crate::learners::{fit_quantile, LearnerConfig, Matrix};
use crate::rng;

use super::{OutcomeModel, PolicyError, SensitiveSpec};

/// Every combination of discrete sensitive levels, in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelProduct {
    combos: Vec<Vec<f64>>,
}

impl LevelProduct {
    pub fn new(levels: &[Vec<f64>], cap: usize) -> Result<LevelProduct, PolicyError> {
        let mut size: usize = 1;
        for l in levels {
            size = size
                .checked_mul(l.len())
                .filter(|&s| s <= cap)
                .ok_or_else(|| PolicyError::Config(format!("level product exceeds the cap of {cap}")))?;
        }
        let mut combos = vec![Vec::with_capacity(levels.len())];
        for l in levels {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    l.iter().map(move |v| {
                        let mut next = c.clone();
                        next.push(*v);
                        next
                    })
                })
                .collect();
        }
        Ok(LevelProduct { combos })
    }

    pub fn len(&self) -> usize {
        self.combos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.combos.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.combos.iter().map(Vec::as_slice)
    }
}

/// Per-unit arm values and the classification targets derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastTable {
    pub g_plus: Vec<f64>,
    pub g_minus: Vec<f64>,
    pub labels: Vec<Action>,
    pub weights: Vec<f64>,
}

impl ContrastTable {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn signed_labels(&self) -> Vec<f64> {
        self.labels.iter().map(|a| a.sign()).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Label `sgn(g+ - g-)` (ties go to `+1`) and weight `|g+ - g-|`.
pub fn build_contrast(g_plus: Vec<f64>, g_minus: Vec<f64>) -> Result<ContrastTable, PolicyError> {
    if g_plus.len() != g_minus.len() {
        return Err(PolicyError::LengthMismatch(g_plus.len(), g_minus.len()));
    }
    let (labels, weights) = g_plus
        .iter()
        .zip(&g_minus)
        .map(|(p, m)| {
            let d = p - m;
            (if d >= 0.0 { Action::Plus } else { Action::Minus }, d.abs())
        })
        .unzip();
    Ok(ContrastTable {
        g_plus,
        g_minus,
        labels,
        weights,
    })
}

/// `n^-1 sum 1(d_i = +1) (g+_i - g-_i)`: the plug-in objective up to a
/// policy-free constant.
pub fn empirical_objective(table: &ContrastTable, decisions: &[Action]) -> f64 {
    let total: f64 = decisions
        .iter()
        .zip(table.g_plus.iter().zip(&table.g_minus))
        .filter(|(d, _)| **d == Action::Plus)
        .map(|(_, (p, m))| p - m)
        .sum();
    total / table.len().max(1) as f64
}

/// `n^-1 sum w_i 1(label_i * f_i < 0)`.
pub fn classification_loss(table: &ContrastTable, scores: &[f64]) -> f64 {
    let total: f64 = table
        .labels
        .iter()
        .zip(&table.weights)
        .zip(scores)
        .filter(|((l, _), f)| l.sign() * **f < 0.0)
        .map(|((_, w), _)| w)
        .sum();
    total / table.len().max(1) as f64
}

/// `G_a(x_i)` for both arms at every training unit, returned as
/// `(g_plus, g_minus)`.
///
/// Discrete: the minimum of the outcome model over the level product.
/// Continuous: a `tau`-quantile regression of the pseudo-outcomes
/// `mu_a(x_i, s_i)` on `x_i`, fitted with `cfg`.
pub fn compute_g(
    train: &Dataset,
    model: &dyn OutcomeModel,
    spec: &SensitiveSpec,
    cfg: &LearnerConfig,
) -> Result<(Vec<f64>, Vec<f64>), PolicyError> {
    if !model.uses_sensitive() {
        return Err(PolicyError::Config(
            "the risk functional needs an outcome model that reads the sensitive variable".into(),
        ));
    }
    spec.validate()?;
    let n = train.len();
    match spec {
        SensitiveSpec::Discrete { .. } => {
            let levels = spec.level_product()?;
            let inf = |i: usize, a: Action| {
                levels
                    .iter()
                    .map(|s| model.predict(train.x(i), s, a))
                    .fold(f64::INFINITY, f64::min)
            };
            Ok((
                (0..n).map(|i| inf(i, Action::Plus)).collect(),
                (0..n).map(|i| inf(i, Action::Minus)).collect(),
            ))
        }
        SensitiveSpec::Continuous { tau } => {
            let x: Matrix = train.x_matrix();
            let arm = |a: Action, label: &str| -> Result<Vec<f64>, PolicyError> {
                let pseudo: Vec<f64> = (0..n).map(|i| model.predict(train.x(i), train.s(i), a)).collect();
                let q = fit_quantile(&x, &pseudo, *tau, &cfg.reseeded(rng::derive_seed(cfg.seed, label)))?;
                Ok(q.predict_matrix(&x))
            };
            let plus = arm(Action::Plus, "quantile+")?;
            let minus = arm(Action::Minus, "quantile-")?;
            Ok((plus, minus))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_order_and_size() {
        let p = LevelProduct::new(&[vec![0.0, 1.0], vec![5.0, 6.0, 7.0]], 100).unwrap();
        assert_eq!(p.len(), 6);
        let all: Vec<&[f64]> = p.iter().collect();
        assert_eq!(all[0], &[0.0, 5.0]);
        assert_eq!(all[5], &[1.0, 7.0]);
        assert!(LevelProduct::new(&[vec![0.0; 65], vec![0.0; 64]], 4096).is_err());
        assert!(LevelProduct::new(&[vec![0.0; 64], vec![0.0; 64]], 4096).is_ok());
    }

    #[test]
    fn contrast_labels_and_ties() {
        let t = build_contrast(vec![3.0, 1.0, 2.0], vec![1.0, 4.0, 2.0]).unwrap();
        assert_eq!(t.labels, vec![Action::Plus, Action::Minus, Action::Plus]);
        assert_eq!(t.weights, vec![2.0, 3.0, 0.0]);
        assert!(build_contrast(vec![1.0], vec![]).is_err());
    }

    #[test]
    fn objective_and_loss_agree() {
        // minimizing the weighted loss maximizes the objective: both move by
        // the same amount when one decision flips
        let t = build_contrast(vec![3.0, 1.0, 2.0, 0.5], vec![1.0, 4.0, 2.5, 0.0]).unwrap();
        let base = [Action::Plus; 4];
        let scores = |d: &[Action]| d.iter().map(|a| a.sign()).collect::<Vec<_>>();
        let v0 = empirical_objective(&t, &base);
        let l0 = classification_loss(&t, &scores(&base));
        for k in 0..4 {
            let mut d = base;
            d[k] = d[k].flip();
            let dv = empirical_objective(&t, &d) - v0;
            let dl = classification_loss(&t, &scores(&d)) - l0;
            assert!((dv + dl).abs() < 1e-12, "{k}: {dv} {dl}");
        }
    }
}
