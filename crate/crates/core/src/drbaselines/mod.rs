//! Doubly robust mean-optimal baselines: augmented inverse-propensity
//! scores per arm, then an exhaustive shallow policy tree over `x`.
//!
//! PT-Base builds the scores from outcome models on `x`; PT-Exp from
//! outcome models on `(x, s)`. Nuisances are fitted once on the training
//! split (no cross-fitting).

mod tree;

pub use tree::{fit_policy_tree, TreeNode, TreePolicy};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{Action, Dataset, OracleModel};
use crate::learners::{fit_weighted_classifier, loss::sigmoid, LearnerConfig, Predictor};
use crate::policy::{MethodTag, OutcomeModel, Policy, PolicyError};
use crate::rng;

pub const PROPENSITY_CLIP: f64 = 0.01;

/// Fitted `P(A = +1 | x [, s])`, clipped to `[0.01, 0.99]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropensityModel {
    pub predictor: Predictor,
    pub use_s: bool,
}

impl PropensityModel {
    pub fn prob_plus(&self, x: &[f64], s: &[f64]) -> f64 {
        let logit = if self.use_s {
            let mut xs = x.to_vec();
            xs.extend_from_slice(s);
            self.predictor.predict(&xs)
        } else {
            self.predictor.predict(x)
        };
        clip(sigmoid(logit))
    }
}

pub fn clip(p: f64) -> f64 {
    p.clamp(PROPENSITY_CLIP, 1.0 - PROPENSITY_CLIP)
}

/// Treatment assignment probabilities used to weight residuals.
#[derive(Debug, Clone)]
pub enum Propensity {
    /// Known design probability of `+1`.
    Known(f64),
    Fitted(PropensityModel),
    /// The generating design of a synthetic scenario.
    Oracle(OracleModel),
}

impl Propensity {
    pub fn prob_plus(&self, x: &[f64], s: &[f64]) -> f64 {
        match self {
            Propensity::Known(p) => *p,
            Propensity::Fitted(m) => m.prob_plus(x, s),
            Propensity::Oracle(m) => m.propensity(x, s),
        }
    }

    pub fn prob(&self, x: &[f64], s: &[f64], a: Action) -> f64 {
        let p = self.prob_plus(x, s);
        match a {
            Action::Plus => p,
            Action::Minus => 1.0 - p,
        }
    }
}

/// Logistic-loss classifier of the received action on `x` (and `s`).
pub fn fit_propensity(train: &Dataset, use_s: bool, cfg: &LearnerConfig) -> Result<PropensityModel, PolicyError> {
    for a in Action::BOTH {
        if train.count_action(a) == 0 {
            return Err(PolicyError::MissingArm(a));
        }
    }
    let x = if use_s { train.xs_matrix() } else { train.x_matrix() };
    let labels: Vec<f64> = (0..train.len()).map(|i| train.a(i).sign()).collect();
    let cfg = cfg.reseeded(rng::derive_seed(cfg.seed, "propensity"));
    let predictor = fit_weighted_classifier(&x, &labels, &vec![1.0; train.len()], &cfg)?;
    Ok(PropensityModel { predictor, use_s })
}

/// Per-unit AIPW scores for both arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub gamma_plus: Vec<f64>,
    pub gamma_minus: Vec<f64>,
}

impl ScoreTable {
    pub fn len(&self) -> usize {
        self.gamma_plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma_plus.is_empty()
    }

    pub fn gamma(&self, i: usize, a: Action) -> f64 {
        match a {
            Action::Plus => self.gamma_plus[i],
            Action::Minus => self.gamma_minus[i],
        }
    }

    pub fn mean(&self, a: Action) -> f64 {
        let v = match a {
            Action::Plus => &self.gamma_plus,
            Action::Minus => &self.gamma_minus,
        };
        v.iter().sum::<f64>() / v.len().max(1) as f64
    }
}

/// `gamma_a(i) = mu_a(i) + 1(a_i = a) (y_i - mu_a(i)) / p_a(i)`.
pub fn aipw_scores(train: &Dataset, model: &dyn OutcomeModel, prop: &Propensity) -> Result<ScoreTable, PolicyError> {
    if let Propensity::Known(p) = prop {
        if !(*p > 0.0 && *p < 1.0) {
            return Err(PolicyError::Config(format!("design propensity must lie in (0, 1), got {p}")));
        }
    }
    let n = train.len();
    let mut table = ScoreTable {
        gamma_plus: Vec::with_capacity(n),
        gamma_minus: Vec::with_capacity(n),
    };
    for i in 0..n {
        let (x, s) = (train.x(i), train.s(i));
        for a in Action::BOTH {
            let mu = model.predict(x, s, a);
            let p = prop.prob(x, s, a);
            if !(p > 0.0 && p < 1.0) {
                return Err(PolicyError::Config(format!("propensity {p} outside (0, 1) at row {i}")));
            }
            let g = if train.a(i) == a { mu + (train.y(i) - mu) / p } else { mu };
            match a {
                Action::Plus => table.gamma_plus.push(g),
                Action::Minus => table.gamma_minus.push(g),
            }
        }
    }
    Ok(table)
}

/// AIPW scores from the given nuisances, then the exact tree of `depth`.
pub fn fit_pt_with_models(
    method: MethodTag,
    train: &Dataset,
    model: &dyn OutcomeModel,
    prop: &Propensity,
    depth: usize,
) -> Result<Policy, PolicyError> {
    let scores = aipw_scores(train, model, prop)?;
    let tree = fit_policy_tree(&train.x_matrix(), &scores, depth)?;
    Ok(Policy::new(method, Arc::new(tree), 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, Sample, ScenarioKind, SensitiveKind, SyntheticScenario};

    struct Constant(f64);

    impl OutcomeModel for Constant {
        fn predict(&self, _x: &[f64], _s: &[f64], _a: Action) -> f64 {
            self.0
        }

        fn uses_sensitive(&self) -> bool {
            false
        }
    }

    /// Knows each row's potential outcomes by its x value.
    struct Lookup;

    impl OutcomeModel for Lookup {
        fn predict(&self, x: &[f64], _s: &[f64], a: Action) -> f64 {
            x[0] * 10.0 + if a == Action::Plus { 1.0 } else { 0.0 }
        }

        fn uses_sensitive(&self) -> bool {
            false
        }
    }

    fn table(rows: &[(f64, Action, f64)]) -> Dataset {
        let samples = rows
            .iter()
            .map(|&(x, a, y)| Sample {
                x: vec![x],
                s: vec![0.0],
                a,
                y,
            })
            .collect();
        Dataset::new(samples, vec!["x".into()], vec!["s".into()], vec![SensitiveKind::Discrete]).unwrap()
    }

    #[test]
    fn perfect_model_recovers_arm_means() {
        // y equals the arm-specific truth, so every residual vanishes
        let ds = table(&[
            (1.0, Action::Plus, 11.0),
            (2.0, Action::Minus, 20.0),
            (3.0, Action::Plus, 31.0),
            (4.0, Action::Minus, 40.0),
        ]);
        let t = aipw_scores(&ds, &Lookup, &Propensity::Known(0.5)).unwrap();
        assert_eq!(t.mean(Action::Plus), (11.0 + 21.0 + 31.0 + 41.0) / 4.0);
        assert_eq!(t.mean(Action::Minus), (10.0 + 20.0 + 30.0 + 40.0) / 4.0);
        assert_eq!(t.gamma_plus, vec![11.0, 21.0, 31.0, 41.0]);
    }

    #[test]
    fn zero_model_is_ipw() {
        let ds = table(&[(0.0, Action::Plus, 3.0), (0.0, Action::Minus, 5.0)]);
        let t = aipw_scores(&ds, &Constant(0.0), &Propensity::Known(0.5)).unwrap();
        assert_eq!(t.gamma_plus, vec![6.0, 0.0]);
        assert_eq!(t.gamma_minus, vec![0.0, 10.0]);
        assert!(aipw_scores(&ds, &Constant(0.0), &Propensity::Known(1.0)).is_err());
    }

    #[test]
    fn clipping() {
        assert_eq!(clip(0.001), 0.01);
        assert_eq!(clip(0.999), 0.99);
        assert_eq!(clip(0.3), 0.3);
    }

    #[test]
    fn randomized_propensity_near_half() {
        let sc = SyntheticScenario::new(ScenarioKind::Example1, SensitiveKind::Discrete);
        let (ds, _) = generate(sc, 2000, 4).unwrap();
        let m = fit_propensity(&ds, true, &LearnerConfig::linear()).unwrap();
        let mean = (0..ds.len()).map(|i| m.prob_plus(ds.x(i), ds.s(i))).sum::<f64>() / ds.len() as f64;
        assert!((mean - 0.5).abs() < 0.05, "{mean}");
        let one = ds.subset(&(0..ds.len()).filter(|&i| ds.a(i) == Action::Plus).collect::<Vec<_>>()).unwrap();
        assert!(matches!(
            fit_propensity(&one, false, &LearnerConfig::linear()),
            Err(PolicyError::MissingArm(Action::Minus))
        ));
    }

    #[test]
    fn observational_propensity_beats_constant() {
        let sc = SyntheticScenario::new(ScenarioKind::Example2, SensitiveKind::Discrete);
        let (train, _) = generate(sc, 3000, 5).unwrap();
        let (test, _) = generate(sc, 2000, 6).unwrap();
        let m = fit_propensity(&train, true, &LearnerConfig::linear()).unwrap();
        let logloss = |p: &dyn Fn(usize) -> f64| {
            (0..test.len())
                .map(|i| {
                    let q = if test.a(i) == Action::Plus { p(i) } else { 1.0 - p(i) };
                    -q.ln()
                })
                .sum::<f64>()
                / test.len() as f64
        };
        let fitted = logloss(&|i| m.prob_plus(test.x(i), test.s(i)));
        let constant = logloss(&|_| 0.5);
        assert!(fitted < constant, "{fitted} vs {constant}");
    }

    #[test]
    fn double_robustness_with_constant_outcome_model() {
        // oracle propensity, deliberately wrong outcome model
        let sc = SyntheticScenario::new(ScenarioKind::Example2, SensitiveKind::Discrete);
        let (ds, oracle) = generate(sc, 10_000, 7).unwrap();
        let t = aipw_scores(&ds, &Constant(10.0), &Propensity::Oracle(oracle)).unwrap();
        let n = ds.len();
        for a in Action::BOTH {
            let g = if a == Action::Plus { &t.gamma_plus } else { &t.gamma_minus };
            let mean = t.mean(a);
            let se = (g.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() / (n as f64).sqrt();
            // Monte-Carlo truth from the same covariates
            let truth = (0..n).map(|i| oracle.mean(ds.oracle_x(i), ds.s(i), a)).sum::<f64>() / n as f64;
            assert!((mean - truth).abs() < 3.0 * se, "{a:?}: {mean} vs {truth} (se {se})");
        }
    }
}
