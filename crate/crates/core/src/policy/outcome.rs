use crate::data::{Action, Dataset, OracleModel};
use crate::learners::{fit_mean, LearnerConfig, Predictor};
use crate::rng;

use super::PolicyError;

/// An estimate of `E(Y | X = x, S = s, A = a)`.
pub trait OutcomeModel: Send + Sync {
    fn predict(&self, x: &[f64], s: &[f64], a: Action) -> f64;

    /// Whether predictions depend on `s` (models fitted on `x` alone ignore it).
    fn uses_sensitive(&self) -> bool;
}

impl OutcomeModel for OracleModel {
    fn predict(&self, x: &[f64], s: &[f64], a: Action) -> f64 {
        self.mean(x, s, a)
    }

    fn uses_sensitive(&self) -> bool {
        true
    }
}

/// One regression per arm, fitted on the rows that received it.
#[derive(Debug, Clone)]
pub struct TwinModel {
    minus: Predictor,
    plus: Predictor,
    use_s: bool,
}

impl TwinModel {
    pub fn arm(&self, a: Action) -> &Predictor {
        match a {
            Action::Minus => &self.minus,
            Action::Plus => &self.plus,
        }
    }

    pub fn into_arms(self) -> (Predictor, Predictor) {
        (self.minus, self.plus)
    }
}

impl OutcomeModel for TwinModel {
    fn predict(&self, x: &[f64], s: &[f64], a: Action) -> f64 {
        if self.use_s {
            let mut xs = Vec::with_capacity(x.len() + s.len());
            xs.extend_from_slice(x);
            xs.extend_from_slice(s);
            self.arm(a).predict(&xs)
        } else {
            self.arm(a).predict(x)
        }
    }

    fn uses_sensitive(&self) -> bool {
        self.use_s
    }
}

/// Fits `mu_a` on `(x, s)` (or on `x` alone when `use_s` is false) for each
/// arm. Each arm draws its own seed from `cfg.seed`.
pub fn fit_outcome_models(train: &Dataset, use_s: bool, cfg: &LearnerConfig) -> Result<TwinModel, PolicyError> {
    let dims = train.n_features() + if use_s { train.n_sensitive() } else { 0 };
    let fit_arm = |a: Action| -> Result<Predictor, PolicyError> {
        let idx: Vec<usize> = (0..train.len()).filter(|&i| train.a(i) == a).collect();
        if idx.is_empty() {
            return Err(PolicyError::MissingArm(a));
        }
        if idx.len() < dims {
            return Err(PolicyError::TooFewInArm {
                arm: a,
                needed: dims,
                got: idx.len(),
            });
        }
        let arm = train.subset(&idx)?;
        let x = if use_s { arm.xs_matrix() } else { arm.x_matrix() };
        let label = if a == Action::Plus { "outcome+" } else { "outcome-" };
        let cfg = cfg.reseeded(rng::derive_seed(cfg.seed, label));
        Ok(fit_mean(&x, &arm.outcomes(), None, &cfg)?)
    };
    let minus = fit_arm(Action::Minus)?;
    let plus = fit_arm(Action::Plus)?;
    Ok(TwinModel { minus, plus, use_s })
}
