use std::sync::Arc;

use crate::data::{Action, Dataset};
use crate::learners::{fit_mean, fit_weighted_classifier, LearnerConfig};
use crate::rng;

use super::{
    build_contrast, compute_g, ArmDifference, ClassifierScore, ContrastTable, MethodTag, OutcomeModel, Policy,
    PolicyError, ScoreFunction, SensitiveSpec, TwinModel, ZeroScore,
};
use super::outcome::fit_outcome_models;

/// Weighted classifier on `x` for a contrast table. An all-zero table (no
/// unit prefers either arm) yields a rule that always ties.
pub fn fit_contrast_classifier(
    method: MethodTag,
    train: &Dataset,
    table: &ContrastTable,
    cfg: &LearnerConfig,
) -> Result<Policy, PolicyError> {
    let tie_seed = rng::derive_seed(cfg.seed, "ties");
    if table.total_weight() == 0.0 {
        // no unit prefers either arm
        log::warn!("{method}: every contrast weight is zero; decisions are coin flips");
        return Ok(Policy::new(method, Arc::new(ZeroScore), tie_seed));
    }
    let f = fit_weighted_classifier(&train.x_matrix(), &table.signed_labels(), &table.weights, cfg)?;
    Ok(Policy::new(method, Arc::new(ClassifierScore(f)), tie_seed))
}

/// Fits the robust rule end to end: outcome models on `(x, s)`, the risk
/// functional `G` per unit and arm, then the weighted classifier on `x`.
pub fn fit_rise(
    train: &Dataset,
    spec: &SensitiveSpec,
    outcome: &LearnerConfig,
    quantile: &LearnerConfig,
    classifier: &LearnerConfig,
) -> Result<Policy, PolicyError> {
    let model = fit_outcome_models(train, true, outcome)?;
    fit_rise_with_model(train, &model, spec, quantile, classifier)
}

/// As [`fit_rise`] with the outcome model supplied, e.g. shared with other
/// methods or the generating model itself.
pub fn fit_rise_with_model(
    train: &Dataset,
    model: &dyn OutcomeModel,
    spec: &SensitiveSpec,
    quantile: &LearnerConfig,
    classifier: &LearnerConfig,
) -> Result<Policy, PolicyError> {
    let (g_plus, g_minus) = compute_g(train, model, spec, quantile)?;
    let table = build_contrast(g_plus, g_minus)?;
    fit_contrast_classifier(MethodTag::Rise, train, &table, classifier)
}

/// Standard rule that never sees `s`: `sgn(mu_+(x) - mu_-(x))`.
pub fn fit_base(train: &Dataset, outcome: &LearnerConfig) -> Result<Policy, PolicyError> {
    let model = fit_outcome_models(train, false, outcome)?;
    Ok(fit_base_with_model(model, outcome.seed))
}

pub fn fit_base_with_model(model: TwinModel, seed: u64) -> Policy {
    let (minus, plus) = model.into_arms();
    let scorer: Arc<dyn ScoreFunction> = Arc::new(ArmDifference { plus, minus });
    Policy::new(MethodTag::Base, scorer, rng::derive_seed(seed, "ties"))
}

/// Expectation rule: `s` enters the outcome model, then is averaged out by
/// regressing `mu_a(x_i, s_i)` on `x_i`; the arm contrast is classified as
/// for the robust rule.
pub fn fit_exp(
    train: &Dataset,
    outcome: &LearnerConfig,
    projection: &LearnerConfig,
    classifier: &LearnerConfig,
) -> Result<Policy, PolicyError> {
    let model = fit_outcome_models(train, true, outcome)?;
    fit_exp_with_model(train, &model, projection, classifier)
}

pub fn fit_exp_with_model(
    train: &Dataset,
    model: &dyn OutcomeModel,
    projection: &LearnerConfig,
    classifier: &LearnerConfig,
) -> Result<Policy, PolicyError> {
    let table = exp_contrast(train, model, projection)?;
    fit_contrast_classifier(MethodTag::Exp, train, &table, classifier)
}

/// Contrast of the projected means `E{mu_a(x, S) | x}` at every training unit.
pub fn exp_contrast(
    train: &Dataset,
    model: &dyn OutcomeModel,
    projection: &LearnerConfig,
) -> Result<ContrastTable, PolicyError> {
    let x = train.x_matrix();
    let project = |a: Action, label: &str| -> Result<Vec<f64>, PolicyError> {
        let pseudo: Vec<f64> = (0..train.len()).map(|i| model.predict(train.x(i), train.s(i), a)).collect();
        let cfg = projection.reseeded(rng::derive_seed(projection.seed, label));
        Ok(fit_mean(&x, &pseudo, None, &cfg)?.predict_matrix(&x))
    };
    let e_plus = project(Action::Plus, "projection+")?;
    let e_minus = project(Action::Minus, "projection-")?;
    build_contrast(e_plus, e_minus)
}
