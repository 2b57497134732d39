//! Test-set metrics: the robust objective, the value, and both restricted
//! to the vulnerable subgroup; plus aggregation over replications.
//!
//! An [`EvalContext`] holds everything that does not depend on the policy
//! (per-unit arm values of the risk functional, conditional means and the
//! vulnerable flags), so evaluating several policies on one test set costs
//! one pass each.

mod aggregate;

pub use aggregate::{aggregate, AggregateCell, AggregateReport, Group, Metric};

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Action, Dataset, OracleModel};
use crate::learners::{fit_quantile, LearnError, LearnerConfig, Matrix};
use crate::policy::{LevelProduct, MethodTag, OutcomeModel, Policy, PolicyError, SensitiveSpec, TwinModel};
use crate::rng;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty test set")]
    Empty,

    #[error("no test unit received the action chosen by the policy")]
    NoMatches,

    #[error("no replications to aggregate")]
    NoReplications,

    #[error("replication {replication} has methods {got:?}, expected {expected:?}")]
    InconsistentMethods {
        replication: usize,
        expected: Vec<MethodTag>,
        got: Vec<MethodTag>,
    },

    #[error(transparent)]
    Policy(#[from] PolicyError),

    #[error(transparent)]
    Learn(#[from] LearnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalSource {
    /// The generating mean function, evaluated at the latent covariates.
    Oracle,
    /// Outcome models trained on the training split.
    Fitted,
}

/// The conditional-mean function metrics are computed against.
#[derive(Clone)]
pub struct EvalModel {
    source: EvalSource,
    model: Arc<dyn OutcomeModel>,
}

impl std::fmt::Debug for EvalModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EvalModel").field("source", &self.source).finish()
    }
}

impl EvalModel {
    pub fn oracle(model: OracleModel) -> EvalModel {
        EvalModel {
            source: EvalSource::Oracle,
            model: Arc::new(model),
        }
    }

    /// Wraps outcome models that read `s`; they must come from training data.
    pub fn fitted(model: TwinModel) -> Result<EvalModel, EvalError> {
        if !model.uses_sensitive() {
            return Err(PolicyError::Config("evaluation models must read the sensitive variable".into()).into());
        }
        Ok(EvalModel {
            source: EvalSource::Fitted,
            model: Arc::new(model),
        })
    }

    /// Any outcome model, tagged with the given source.
    pub fn custom(source: EvalSource, model: Arc<dyn OutcomeModel>) -> EvalModel {
        EvalModel { source, model }
    }

    pub fn source(&self) -> EvalSource {
        self.source
    }

    pub fn mean(&self, x: &[f64], s: &[f64], a: Action) -> f64 {
        self.model.predict(x, s, a)
    }

    /// Covariates the model is evaluated at for test unit `i`.
    fn covariates<'a>(&self, test: &'a Dataset, i: usize) -> &'a [f64] {
        match self.source {
            EvalSource::Oracle => test.oracle_x(i),
            EvalSource::Fitted => test.x(i),
        }
    }
}

/// How the value of a policy is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ValueEstimator {
    /// Self-normalized IPW with a known design probability of `+1`.
    Randomized { propensity: f64 },
    /// Plug-in mean of the evaluation model at the policy's action.
    Observational,
}

/// One method's metrics on one test set. Vulnerable cells are `None` when
/// no unit is flagged (or, for IPW, none of the flagged units matches).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: MethodTag,
    pub objective_all: f64,
    pub objective_vulnerable: Option<f64>,
    pub value_all: f64,
    pub value_vulnerable: Option<f64>,
    pub n_vulnerable: usize,
}

impl MetricsRow {
    pub fn get(&self, metric: Metric, group: Group) -> Option<f64> {
        match (metric, group) {
            (Metric::Objective, Group::All) => Some(self.objective_all),
            (Metric::Objective, Group::Vulnerable) => self.objective_vulnerable,
            (Metric::Value, Group::All) => Some(self.value_all),
            (Metric::Value, Group::Vulnerable) => self.value_vulnerable,
        }
    }
}

/// Discrete arg-inf tolerance on oracle models.
pub const ORACLE_TOLERANCE: f64 = 1e-9;
/// Fraction of the prediction range used as tolerance on fitted models.
pub const FITTED_TOLERANCE: f64 = 0.05;
const PROBES: usize = 16;

/// Is `(x, s)` in the arg-inf set of the worse arm? `a*` is the arm with the
/// smaller infimum over `levels` (`-1` on ties); units where the worse arm
/// does not vary with `s` are never flagged.
pub fn identify_vulnerable(model: &dyn OutcomeModel, x: &[f64], s: &[f64], levels: &LevelProduct, tol: f64) -> bool {
    let inf = |a: Action| levels.iter().map(|l| model.predict(x, l, a)).fold(f64::INFINITY, f64::min);
    let (gp, gm) = (inf(Action::Plus), inf(Action::Minus));
    let worst = if gp < gm { Action::Plus } else { Action::Minus };
    let floor = gp.min(gm);
    let sup = levels.iter().map(|l| model.predict(x, l, worst)).fold(f64::NEG_INFINITY, f64::max);
    sup - floor > tol && model.predict(x, s, worst) <= floor + tol
}

/// Policy-independent evaluation state for one test set.
#[derive(Debug, Clone)]
pub struct EvalContext {
    /// Risk functional per unit: `[g_minus, g_plus]`.
    g: Vec<[f64; 2]>,
    /// Evaluation-model mean at the unit's own `s`: `[mu_minus, mu_plus]`.
    mu: Vec<[f64; 2]>,
    vulnerable: Vec<bool>,
    actions: Vec<Action>,
    outcomes: Vec<f64>,
    tolerance: f64,
}

impl EvalContext {
    /// `quantile` configures the conditional-quantile fits used for a
    /// continuous sensitive variable; it is ignored for discrete ones.
    pub fn new(
        model: &EvalModel,
        test: &Dataset,
        spec: &SensitiveSpec,
        quantile: &LearnerConfig,
    ) -> Result<EvalContext, EvalError> {
        let n = test.len();
        if n == 0 {
            return Err(EvalError::Empty);
        }
        spec.validate()?;
        let mu: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let x = model.covariates(test, i);
                [model.mean(x, test.s(i), Action::Minus), model.mean(x, test.s(i), Action::Plus)]
            })
            .collect();
        let (g, vulnerable, tolerance) = match spec {
            SensitiveSpec::Discrete { .. } => {
                let levels = spec.level_product()?;
                let mut table = Vec::with_capacity(n);
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for i in 0..n {
                    let x = model.covariates(test, i);
                    let mut row = [[f64::INFINITY, f64::NEG_INFINITY]; 2];
                    for a in Action::BOTH {
                        for l in levels.iter() {
                            let v = model.mean(x, l, a);
                            row[a.index()][0] = row[a.index()][0].min(v);
                            row[a.index()][1] = row[a.index()][1].max(v);
                        }
                        lo = lo.min(row[a.index()][0]);
                        hi = hi.max(row[a.index()][1]);
                    }
                    table.push(row);
                }
                let tol = match model.source {
                    EvalSource::Oracle => ORACLE_TOLERANCE,
                    EvalSource::Fitted => FITTED_TOLERANCE * (hi - lo),
                };
                let g: Vec<[f64; 2]> = table.iter().map(|r| [r[0][0], r[1][0]]).collect();
                let flags = (0..n)
                    .map(|i| {
                        let worst = worse_arm(g[i]);
                        let [inf, sup] = table[i][worst.index()];
                        sup - inf > tol && mu[i][worst.index()] <= inf + tol
                    })
                    .collect();
                (g, flags, tol)
            }
            SensitiveSpec::Continuous { tau } => {
                let rows: Vec<Vec<f64>> = (0..n).map(|i| model.covariates(test, i).to_vec()).collect();
                let x = Matrix::from_rows(&rows)?;
                let mut q = [Vec::new(), Vec::new()];
                for a in Action::BOTH {
                    let pseudo: Vec<f64> = mu.iter().map(|m| m[a.index()]).collect();
                    let label = if a == Action::Plus { "eval-quantile+" } else { "eval-quantile-" };
                    let cfg = quantile.reseeded(rng::derive_seed(quantile.seed, label));
                    q[a.index()] = fit_quantile(&x, &pseudo, *tau, &cfg)?.predict_matrix(&x);
                }
                let g: Vec<[f64; 2]> = (0..n).map(|i| [q[0][i], q[1][i]]).collect();
                let tol = match model.source {
                    EvalSource::Oracle => ORACLE_TOLERANCE,
                    EvalSource::Fitted => {
                        let (lo, hi) = mu
                            .iter()
                            .flatten()
                            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
                        FITTED_TOLERANCE * (hi - lo)
                    }
                };
                let probes = probe_values(test);
                let flags = (0..n)
                    .map(|i| {
                        let worst = worse_arm(g[i]);
                        let x = model.covariates(test, i);
                        let (lo, hi) = probes.iter().map(|s| model.mean(x, s, worst)).fold(
                            (f64::INFINITY, f64::NEG_INFINITY),
                            |(l, h), v| (l.min(v), h.max(v)),
                        );
                        hi - lo > tol && mu[i][worst.index()] <= g[i][worst.index()] + tol
                    })
                    .collect();
                (g, flags, tol)
            }
        };
        Ok(EvalContext {
            g,
            mu,
            vulnerable,
            actions: (0..n).map(|i| test.a(i)).collect(),
            outcomes: test.outcomes(),
            tolerance,
        })
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn vulnerable(&self) -> &[bool] {
        &self.vulnerable
    }

    pub fn n_vulnerable(&self) -> usize {
        self.vulnerable.iter().filter(|v| **v).count()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// `G` of unit `i` under arm `a`.
    pub fn g(&self, i: usize, a: Action) -> f64 {
        self.g[i][a.index()]
    }

    /// Mean of `G_{d(x_i)}` over all units and over vulnerable units.
    pub fn objective(&self, decisions: &[Action]) -> (f64, Option<f64>) {
        self.average(decisions, |i, a| self.g[i][a.index()])
    }

    /// Plug-in value: mean of the evaluation model at `(x_i, s_i, d(x_i))`.
    pub fn value_observational(&self, decisions: &[Action]) -> (f64, Option<f64>) {
        self.average(decisions, |i, a| self.mu[i][a.index()])
    }

    /// Self-normalized IPW value under a known design.
    pub fn value_randomized(&self, decisions: &[Action], propensity: f64) -> Result<(f64, Option<f64>), EvalError> {
        let ratio = |filter: &dyn Fn(usize) -> bool| {
            let (mut num, mut den) = (0.0, 0.0);
            for (i, d) in decisions.iter().enumerate() {
                if filter(i) && self.actions[i] == *d {
                    let p = if *d == Action::Plus { propensity } else { 1.0 - propensity };
                    num += self.outcomes[i] / p;
                    den += 1.0 / p;
                }
            }
            (den > 0.0).then(|| num / den)
        };
        let all = ratio(&|_| true).ok_or(EvalError::NoMatches)?;
        Ok((all, ratio(&|i| self.vulnerable[i])))
    }

    fn average(&self, decisions: &[Action], f: impl Fn(usize, Action) -> f64) -> (f64, Option<f64>) {
        let (mut all, mut vul, mut nv) = (0.0, 0.0, 0usize);
        for (i, d) in decisions.iter().enumerate() {
            let v = f(i, *d);
            all += v;
            if self.vulnerable[i] {
                vul += v;
                nv += 1;
            }
        }
        (all / decisions.len() as f64, (nv > 0).then(|| vul / nv as f64))
    }

    /// All metrics for `policy` on the test set this context was built from.
    pub fn evaluate(&self, policy: &Policy, test: &Dataset, value: ValueEstimator) -> Result<MetricsRow, EvalError> {
        if test.len() != self.len() {
            return Err(PolicyError::LengthMismatch(test.len(), self.len()).into());
        }
        let decisions = policy.decide_all(test);
        let (objective_all, objective_vulnerable) = self.objective(&decisions);
        let (value_all, value_vulnerable) = match value {
            ValueEstimator::Randomized { propensity } => self.value_randomized(&decisions, propensity)?,
            ValueEstimator::Observational => self.value_observational(&decisions),
        };
        let n_vulnerable = self.n_vulnerable();
        Ok(MetricsRow {
            method: policy.method(),
            objective_all,
            objective_vulnerable: objective_vulnerable.filter(|_| n_vulnerable > 0),
            value_all,
            value_vulnerable: value_vulnerable.filter(|_| n_vulnerable > 0),
            n_vulnerable,
        })
    }
}

fn worse_arm(g: [f64; 2]) -> Action {
    if g[1] < g[0] {
        Action::Plus
    } else {
        Action::Minus
    }
}

/// Sensitive values spread across the test distribution (by the first
/// coordinate), used to check whether the worse arm varies with `s`.
fn probe_values(test: &Dataset) -> Vec<Vec<f64>> {
    let n = test.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| test.s(a)[0].total_cmp(&test.s(b)[0]).then(a.cmp(&b)));
    let k = PROBES.min(n);
    (0..k)
        .map(|j| test.s(idx[if k == 1 { 0 } else { j * (n - 1) / (k - 1) }]).to_vec())
        .collect()
}

/// Objective over a test set for one policy.
pub fn estimate_objective(policy: &Policy, ctx: &EvalContext, test: &Dataset) -> (f64, Option<f64>) {
    ctx.objective(&policy.decide_all(test))
}

pub fn estimate_value_observational(policy: &Policy, ctx: &EvalContext, test: &Dataset) -> (f64, Option<f64>) {
    ctx.value_observational(&policy.decide_all(test))
}

pub fn estimate_value_randomized(
    policy: &Policy,
    ctx: &EvalContext,
    test: &Dataset,
    propensity: f64,
) -> Result<(f64, Option<f64>), EvalError> {
    ctx.value_randomized(&policy.decide_all(test), propensity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, Sample, ScenarioKind, SensitiveKind, SyntheticScenario};
    use crate::policy::PlugInRule;

    fn example1(n: usize, seed: u64) -> (Dataset, OracleModel) {
        let sc = SyntheticScenario::new(ScenarioKind::Example1, SensitiveKind::Discrete);
        generate(sc, n, seed).unwrap()
    }

    fn threshold_policy(below: Action, above: Action) -> Policy {
        #[derive(Debug)]
        struct Step(f64, f64);
        impl crate::policy::ScoreFunction for Step {
            fn score(&self, x: &[f64]) -> f64 {
                if x[0] <= 0.5 { self.0 } else { self.1 }
            }
            fn export(&self) -> serde_json::Value {
                serde_json::Value::Null
            }
        }
        Policy::new(MethodTag::Oracle, Arc::new(Step(below.sign(), above.sign())), 0)
    }

    /// Every (x, s) cell of the toy design, with equal mass.
    fn grid() -> Dataset {
        let mut samples = Vec::new();
        for x in [0.25, 0.75] {
            for s in [0.0, 1.0] {
                samples.push(Sample {
                    x: vec![x],
                    s: vec![s],
                    a: Action::Plus,
                    y: 0.0,
                });
            }
        }
        Dataset::new(samples, vec!["x".into()], vec!["s".into()], vec![SensitiveKind::Discrete]).unwrap()
    }

    #[test]
    fn toy_cells() {
        let (_, oracle) = example1(10, 0);
        let em = EvalModel::oracle(oracle);
        let spec = SensitiveSpec::discrete(vec![vec![0.0, 1.0]]).unwrap();
        let test = grid();
        let ctx = EvalContext::new(&em, &test, &spec, &LearnerConfig::linear()).unwrap();
        // x <= .5: worse arm +1 attains 0 at s = 1; x > .5: worse arm -1 attains 5 at s = 0
        assert_eq!(ctx.vulnerable(), &[false, true, true, false]);

        let rise = threshold_policy(Action::Minus, Action::Plus);
        let mean_opt = threshold_policy(Action::Plus, Action::Minus);
        let (obj, _) = estimate_objective(&rise, &ctx, &test);
        assert_eq!(obj, 12.0);
        assert_eq!(estimate_objective(&mean_opt, &ctx, &test).0, 2.5);
        assert_eq!(estimate_value_observational(&rise, &ctx, &test), (13.0, Some(14.0)));
        assert_eq!(estimate_value_observational(&mean_opt, &ctx, &test), (15.5, Some(2.5)));
    }

    #[test]
    fn plug_in_oracle_rules_reproduce_toy_cells() {
        let (_, oracle) = example1(10, 0);
        let levels = LevelProduct::new(&[vec![0.0, 1.0]], 16).unwrap();
        let model: Arc<dyn OutcomeModel> = Arc::new(oracle);
        let robust = Policy::plug_in(model.clone(), PlugInRule::Infimum(levels.clone()), 1);
        let mean = Policy::plug_in(model, PlugInRule::Mean { levels, probs: vec![0.5, 0.5] }, 1);
        let test = grid();
        assert_eq!(robust.decide_all(&test), vec![Action::Minus, Action::Minus, Action::Plus, Action::Plus]);
        assert_eq!(mean.decide_all(&test), vec![Action::Plus, Action::Plus, Action::Minus, Action::Minus]);
    }

    #[test]
    fn identify_vulnerable_cells_and_affine_invariance() {
        let (_, oracle) = example1(10, 0);
        let levels = LevelProduct::new(&[vec![0.0, 1.0]], 16).unwrap();
        assert!(identify_vulnerable(&oracle, &[0.25], &[1.0], &levels, 1e-9));
        assert!(!identify_vulnerable(&oracle, &[0.25], &[0.0], &levels, 1e-9));
        assert!(identify_vulnerable(&oracle, &[0.75], &[0.0], &levels, 1e-9));
        assert!(!identify_vulnerable(&oracle, &[0.75], &[1.0], &levels, 1e-9));

        struct Affine(OracleModel);
        impl OutcomeModel for Affine {
            fn predict(&self, x: &[f64], s: &[f64], a: Action) -> f64 {
                3.0 * self.0.mean(x, s, a) - 7.0
            }
            fn uses_sensitive(&self) -> bool {
                true
            }
        }
        let scaled = Affine(oracle);
        for x in [0.1, 0.4, 0.6, 0.9] {
            for s in [0.0, 1.0] {
                assert_eq!(
                    identify_vulnerable(&oracle, &[x], &[s], &levels, 1e-9),
                    identify_vulnerable(&scaled, &[x], &[s], &levels, 1e-9)
                );
            }
        }
    }

    #[test]
    fn ipw_hand_table() {
        let ctx = EvalContext {
            g: vec![[0.0; 2]; 4],
            mu: vec![[0.0; 2]; 4],
            vulnerable: vec![false; 4],
            actions: vec![Action::Plus, Action::Minus, Action::Plus, Action::Minus],
            outcomes: vec![1.0, 2.0, 3.0, 4.0],
            tolerance: 0.0,
        };
        let d = [Action::Minus; 4];
        assert_eq!(ctx.value_randomized(&d, 0.5).unwrap(), (3.0, None));
        // every unit matches: plain mean
        let all = [Action::Plus, Action::Minus, Action::Plus, Action::Minus];
        assert_eq!(ctx.value_randomized(&all, 0.5).unwrap().0, 2.5);
        let none = [Action::Minus, Action::Plus, Action::Minus, Action::Plus];
        assert!(matches!(ctx.value_randomized(&none, 0.5), Err(EvalError::NoMatches)));
    }

    #[test]
    fn duplicated_rows_leave_ipw_unchanged() {
        let (ds, oracle) = example1(400, 3);
        let twice = {
            let idx: Vec<usize> = (0..ds.len()).chain(0..ds.len()).collect();
            ds.subset(&idx).unwrap()
        };
        let spec = SensitiveSpec::discrete(vec![vec![0.0, 1.0]]).unwrap();
        let em = EvalModel::oracle(oracle);
        let p = threshold_policy(Action::Minus, Action::Plus);
        let a = EvalContext::new(&em, &ds, &spec, &LearnerConfig::linear()).unwrap();
        let b = EvalContext::new(&em, &twice, &spec, &LearnerConfig::linear()).unwrap();
        let va = estimate_value_randomized(&p, &a, &ds, 0.5).unwrap();
        let vb = estimate_value_randomized(&p, &b, &twice, 0.5).unwrap();
        assert!((va.0 - vb.0).abs() < 1e-12);
    }

    #[test]
    fn constant_model_value_is_constant() {
        struct Flat;
        impl OutcomeModel for Flat {
            fn predict(&self, _: &[f64], _: &[f64], _: Action) -> f64 {
                4.5
            }
            fn uses_sensitive(&self) -> bool {
                true
            }
        }
        let (ds, _) = example1(50, 1);
        let em = EvalModel::custom(EvalSource::Oracle, Arc::new(Flat));
        let spec = SensitiveSpec::discrete(vec![vec![0.0, 1.0]]).unwrap();
        let ctx = EvalContext::new(&em, &ds, &spec, &LearnerConfig::linear()).unwrap();
        let p = threshold_policy(Action::Plus, Action::Minus);
        assert_eq!(estimate_value_observational(&p, &ctx, &ds), (4.5, None));
        assert_eq!(ctx.n_vulnerable(), 0);
    }

    #[test]
    fn constant_policies_are_symmetric_under_arm_swap() {
        struct Swapped(OracleModel);
        impl OutcomeModel for Swapped {
            fn predict(&self, x: &[f64], s: &[f64], a: Action) -> f64 {
                self.0.mean(x, s, a.flip())
            }
            fn uses_sensitive(&self) -> bool {
                true
            }
        }
        let (ds, oracle) = example1(200, 2);
        let spec = SensitiveSpec::discrete(vec![vec![0.0, 1.0]]).unwrap();
        let lin = LearnerConfig::linear();
        let a = EvalContext::new(&EvalModel::oracle(oracle), &ds, &spec, &lin).unwrap();
        let b = EvalContext::new(&EvalModel::custom(EvalSource::Oracle, Arc::new(Swapped(oracle))), &ds, &spec, &lin)
            .unwrap();
        let plus = Policy::constant(MethodTag::Base, Action::Plus);
        let minus = Policy::constant(MethodTag::Base, Action::Minus);
        assert_eq!(estimate_objective(&plus, &a, &ds).0, estimate_objective(&minus, &b, &ds).0);
    }
}
