//! Browser demo on the one-covariate toy scenario: learned decision
//! regions, the per-arm risk curves behind them, and a hand-set threshold
//! rule scored against the generating model.
//!
//! Each operation is a plain function returning JSON; the `#[wasm_bindgen]`
//! wrappers only translate errors.

use std::sync::Arc;

use rise_core::data::{generate, ScenarioKind, SyntheticScenario};
use rise_core::eval::{EvalContext, EvalModel, MetricsRow, ValueEstimator};
use rise_core::learners::{fit_quantile, LearnerConfig, Matrix};
use rise_core::policy::{fit_exp, fit_rise, ScoreFunction};
use rise_core::{rng, Action, MethodTag, Policy, SensitiveKind, SensitiveSpec};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

const GRID: usize = 101;
const TEST_N: usize = 2000;
const MAX_N: usize = 20_000;
const SCATTER: usize = 400;

fn s_kind(name: &str) -> Result<SensitiveKind, String> {
    match name {
        "discrete" => Ok(SensitiveKind::Discrete),
        "continuous" => Ok(SensitiveKind::Continuous),
        other => Err(format!("unknown sensitive kind `{other}`")),
    }
}

fn check_args(n: usize, tau: f64) -> Result<(), String> {
    if !(50..=MAX_N).contains(&n) {
        return Err(format!("n must lie in [50, {MAX_N}], got {n}"));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(format!("tau must lie in (0, 1), got {tau}"));
    }
    Ok(())
}

fn spec_for(kind: SensitiveKind, tau: f64) -> Result<SensitiveSpec, String> {
    match kind {
        SensitiveKind::Discrete => SensitiveSpec::discrete(vec![vec![0.0, 1.0]]),
        SensitiveKind::Continuous => SensitiveSpec::continuous(tau),
    }
    .map_err(|e| e.to_string())
}

/// Small learners so a fit stays interactive in the browser.
fn learner(seed: u64, label: &str) -> LearnerConfig {
    LearnerConfig {
        epochs: 25,
        ..LearnerConfig::feedforward(&[16])
    }
    .reseeded(rng::derive_seed(seed, label))
}

fn grid() -> Vec<f64> {
    (0..GRID).map(|k| k as f64 / (GRID - 1) as f64).collect()
}

#[derive(Serialize)]
struct Metrics {
    objective_all: f64,
    objective_vulnerable: Option<f64>,
    value_all: f64,
    value_vulnerable: Option<f64>,
}

impl From<MetricsRow> for Metrics {
    fn from(r: MetricsRow) -> Self {
        Metrics {
            objective_all: r.objective_all,
            objective_vulnerable: r.objective_vulnerable,
            value_all: r.value_all,
            value_vulnerable: r.value_vulnerable,
        }
    }
}

struct Bench {
    train: rise_core::Dataset,
    test: rise_core::Dataset,
    ctx: EvalContext,
    spec: SensitiveSpec,
}

fn bench(kind: SensitiveKind, tau: f64, n: usize, seed: u64) -> Result<Bench, String> {
    check_args(n, tau)?;
    let sc = SyntheticScenario::new(ScenarioKind::Example1, kind);
    let (train, oracle) = generate(sc, n, rng::derive_seed(seed, "train")).map_err(|e| e.to_string())?;
    let (test, _) = generate(sc, TEST_N, rng::derive_seed(seed, "test")).map_err(|e| e.to_string())?;
    let spec = spec_for(kind, tau)?;
    let ctx = EvalContext::new(&EvalModel::oracle(oracle), &test, &spec, &learner(seed, "eval"))
        .map_err(|e| e.to_string())?;
    Ok(Bench { train, test, ctx, spec })
}

/// Fits the robust rule and the expectation rule, returns both scores and
/// decisions over a grid of `x` plus oracle metrics on a fresh test set.
pub fn decision_regions_json(kind: &str, tau: f64, n: usize, seed: u64) -> Result<String, String> {
    let b = bench(s_kind(kind)?, tau, n, seed)?;
    let rise = fit_rise(&b.train, &b.spec, &learner(seed, "outcome"), &learner(seed, "quantile"), &learner(seed, "classifier"))
        .map_err(|e| e.to_string())?;
    let exp = fit_exp(&b.train, &learner(seed, "outcome"), &learner(seed, "projection"), &learner(seed, "classifier"))
        .map_err(|e| e.to_string())?;
    let xs = grid();
    let mut rules = serde_json::Map::new();
    for p in [&rise, &exp] {
        let row = b.ctx.evaluate(p, &b.test, ValueEstimator::Randomized { propensity: 0.5 }).map_err(|e| e.to_string())?;
        let scores: Vec<f64> = xs.iter().map(|x| p.score(&[*x])).collect();
        let decisions: Vec<f64> = xs.iter().map(|x| p.decide(&[*x]).sign()).collect();
        rules.insert(
            p.method().to_string(),
            json!({ "scores": scores, "decisions": decisions, "metrics": Metrics::from(row) }),
        );
    }
    Ok(json!({ "x": xs, "rules": rules, "n_vulnerable": b.ctx.n_vulnerable() }).to_string())
}

/// Per-arm `tau`-quantile regression of the generating means `mu_a(x, S)`
/// on `x`: the curves a robust rule compares. Returns a scatter subsample
/// of `(x, mu_a)` and both fitted curves on a grid.
pub fn risk_curves_json(tau: f64, n: usize, seed: u64) -> Result<String, String> {
    check_args(n, tau)?;
    let sc = SyntheticScenario::new(ScenarioKind::Example1, SensitiveKind::Continuous);
    let (train, oracle) = generate(sc, n, rng::derive_seed(seed, "train")).map_err(|e| e.to_string())?;
    let x = train.x_matrix();
    let xs = grid();
    let gx = Matrix::new(GRID, 1, xs.clone()).map_err(|e| e.to_string())?;
    let stride = (n / SCATTER).max(1);
    let mut arms = serde_json::Map::new();
    for a in Action::BOTH {
        let y: Vec<f64> = (0..train.len()).map(|i| oracle.mean(train.x(i), train.s(i), a)).collect();
        let q = fit_quantile(&x, &y, tau, &learner(seed, &format!("quantile{}", a.sign())))
            .map_err(|e| e.to_string())?;
        let points: Vec<[f64; 2]> = (0..train.len()).step_by(stride).map(|i| [train.x(i)[0], y[i]]).collect();
        arms.insert(
            format!("{:+}", a.sign() as i32),
            json!({ "points": points, "curve": q.predict_matrix(&gx) }),
        );
    }
    Ok(json!({ "x": xs, "tau": tau, "arms": arms }).to_string())
}

/// `below` for `x <= cut`, the other arm above.
#[derive(Debug)]
struct Step {
    cut: f64,
    below: Action,
}

impl ScoreFunction for Step {
    fn score(&self, x: &[f64]) -> f64 {
        let a = if x[0] <= self.cut { self.below } else { self.below.flip() };
        a.sign()
    }

    fn export(&self) -> serde_json::Value {
        json!({ "scorer": "step", "cut": self.cut, "below": self.below })
    }
}

/// Oracle metrics of the hand-set rule "`below` when `x <= cut`".
pub fn threshold_rule_json(kind: &str, tau: f64, cut: f64, below: i32, seed: u64) -> Result<String, String> {
    let below = Action::from_sign(f64::from(below)).ok_or("`below` must be -1 or 1")?;
    if !cut.is_finite() {
        return Err("cut must be finite".into());
    }
    let b = bench(s_kind(kind)?, tau, 50, seed)?;
    let p = Policy::new(MethodTag::Oracle, Arc::new(Step { cut, below }), 0);
    let row = b.ctx.evaluate(&p, &b.test, ValueEstimator::Observational).map_err(|e| e.to_string())?;
    Ok(json!({ "cut": cut, "below": below, "metrics": Metrics::from(row) }).to_string())
}

#[wasm_bindgen]
pub fn decision_regions(kind: &str, tau: f64, n: usize, seed: u32) -> Result<String, JsError> {
    decision_regions_json(kind, tau, n, u64::from(seed)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn risk_curves(tau: f64, n: usize, seed: u32) -> Result<String, JsError> {
    risk_curves_json(tau, n, u64::from(seed)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn threshold_rule(kind: &str, tau: f64, cut: f64, below: i32, seed: u32) -> Result<String, JsError> {
    threshold_rule_json(kind, tau, cut, below, u64::from(seed)).map_err(|e| JsError::new(&e))
}
