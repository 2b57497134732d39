//! One replication: data, every requested method, evaluation.

use std::time::Instant;

use rise_core::data::{generate, split, Dataset, OracleModel, SyntheticScenario};
use rise_core::drbaselines::{fit_propensity, fit_pt_with_models, Propensity};
use rise_core::eval::{EvalContext, EvalModel, MetricsRow, ValueEstimator};
use rise_core::learners::{cross_validate, LearnerConfig, Matrix, TuneTask};
use rise_core::policy::{
    build_contrast, compute_g, exp_contrast, fit_base_with_model, fit_contrast_classifier, fit_outcome_models,
    ContrastTable, OutcomeModel, TwinModel,
};
use rise_core::{rng, Action, MethodTag, Policy, SensitiveKind, SensitiveSpec};

use crate::config::RunConfig;
use crate::CliError;

/// Where replications draw their data from.
pub enum Source {
    Synthetic(SyntheticScenario),
    /// Loaded once; every replication resplits it.
    Csv { data: Dataset, propensity: Option<f64> },
}

impl Source {
    pub fn from_config(cfg: &RunConfig) -> Result<Source, CliError> {
        if let Some(kind) = cfg.scenario {
            let sc = SyntheticScenario {
                kind,
                s_kind: cfg.s_kind,
                noise_sd: cfg.noise_sd,
            };
            sc.validate().map_err(|e| CliError::Config(e.to_string()))?;
            return Ok(Source::Synthetic(sc));
        }
        let csv = cfg.csv.as_ref().expect("validated config has a source");
        let data = rise_core::data::load_csv(&csv.path, &csv.schema).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Source::Csv {
            data,
            propensity: csv.propensity,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub id: usize,
    pub seed: u64,
    pub rows: Vec<MetricsRow>,
    /// Wall-clock seconds per stage (`shared` covers models reused by
    /// several methods).
    pub timings: Vec<(String, f64)>,
}

pub fn replication_seed(base_seed: u64, r: usize) -> u64 {
    base_seed.wrapping_add(r as u64)
}

fn runtime(r: usize) -> impl Fn(&dyn std::fmt::Display) -> CliError {
    move |e| CliError::Runtime(format!("replication {r}: {e}"))
}

/// First grid entry with the smallest loss; singleton grids skip evaluation.
fn select(
    grid: &[LearnerConfig],
    loss: impl Fn(&LearnerConfig) -> Result<f64, CliError>,
) -> Result<LearnerConfig, CliError> {
    if grid.len() == 1 {
        return Ok(grid[0].clone());
    }
    let mut best: Option<(f64, &LearnerConfig)> = None;
    for cfg in grid {
        let l = loss(cfg)?;
        if best.is_none_or(|(b, _)| l < b) {
            best = Some((l, cfg));
        }
    }
    Ok(best.expect("non-empty grid").1.clone())
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    r: usize,
    seed: u64,
    train: &'a Dataset,
}

impl Ctx<'_> {
    fn err(&self) -> impl Fn(&dyn std::fmt::Display) -> CliError {
        runtime(self.r)
    }

    fn seeded(&self, cfg: &LearnerConfig, label: &str) -> LearnerConfig {
        cfg.reseeded(rng::derive_seed(self.seed, label))
    }

    fn arm_indices(&self, a: Action) -> Vec<usize> {
        (0..self.train.len()).filter(|&i| self.train.a(i) == a).collect()
    }

    fn outcome_model(&self, use_s: bool) -> Result<TwinModel, CliError> {
        let label = if use_s { "outcome-xs" } else { "outcome-x" };
        let folds = self.cfg.cv_folds;
        let chosen = select(&self.cfg.learners.outcome, |c| {
            let mut total = 0.0;
            for a in Action::BOTH {
                let arm = self.train.subset(&self.arm_indices(a)).map_err(|e| self.err()(&e))?;
                let x = if use_s { arm.xs_matrix() } else { arm.x_matrix() };
                let y = arm.outcomes();
                let task = TuneTask::Mean { x: &x, y: &y, weights: None };
                total += cross_validate(&task, &self.seeded(c, label), folds, rng::derive_seed(self.seed, label))
                    .map_err(|e| self.err()(&e))?;
            }
            Ok(total)
        })?;
        fit_outcome_models(self.train, use_s, &self.seeded(&chosen, label)).map_err(|e| self.err()(&e))
    }

    fn classifier(&self, method: MethodTag, table: &ContrastTable) -> Result<Policy, CliError> {
        let label = format!("classifier-{method}");
        let x = self.train.x_matrix();
        let labels = table.signed_labels();
        let chosen = if table.total_weight() > 0.0 {
            select(&self.cfg.learners.classifier, |c| {
                let task = TuneTask::Classifier {
                    x: &x,
                    labels: &labels,
                    weights: &table.weights,
                };
                cross_validate(&task, &self.seeded(c, &label), self.cfg.cv_folds, rng::derive_seed(self.seed, &label))
                    .map_err(|e| self.err()(&e))
            })?
        } else {
            self.cfg.learners.classifier[0].clone()
        };
        fit_contrast_classifier(method, self.train, table, &self.seeded(&chosen, &label)).map_err(|e| self.err()(&e))
    }

    /// Quantile-learner choice, tuned on the training pseudo-outcomes of `model`.
    fn quantile_config(&self, model: &dyn OutcomeModel, tau: f64) -> Result<LearnerConfig, CliError> {
        let x: Matrix = self.train.x_matrix();
        let chosen = select(&self.cfg.learners.quantile, |c| {
            let mut total = 0.0;
            for a in Action::BOTH {
                let y: Vec<f64> = (0..self.train.len())
                    .map(|i| model.predict(self.train.x(i), self.train.s(i), a))
                    .collect();
                let task = TuneTask::Quantile { x: &x, y: &y, tau };
                total += cross_validate(&task, &self.seeded(c, "quantile"), self.cfg.cv_folds, rng::derive_seed(self.seed, "quantile"))
                    .map_err(|e| self.err()(&e))?;
            }
            Ok(total)
        })?;
        Ok(self.seeded(&chosen, "quantile"))
    }

    fn propensity(&self, known: Option<f64>) -> Result<Propensity, CliError> {
        if let Some(p) = known {
            return Ok(Propensity::Known(p));
        }
        let x = self.train.xs_matrix();
        let labels: Vec<f64> = (0..self.train.len()).map(|i| self.train.a(i).sign()).collect();
        let ones = vec![1.0; self.train.len()];
        let chosen = select(&self.cfg.learners.propensity, |c| {
            let task = TuneTask::Classifier {
                x: &x,
                labels: &labels,
                weights: &ones,
            };
            cross_validate(&task, c, self.cfg.cv_folds, rng::derive_seed(self.seed, "propensity"))
                .map_err(|e| self.err()(&e))
        })?;
        let m = fit_propensity(self.train, true, &self.seeded(&chosen, "propensity")).map_err(|e| self.err()(&e))?;
        Ok(Propensity::Fitted(m))
    }
}

/// Runs replication `r` of `cfg`: draws or resplits data, fits every
/// requested method on the training part and evaluates on the test part.
pub fn run_replication(cfg: &RunConfig, source: &Source, r: usize) -> Result<Replication, CliError> {
    let seed = replication_seed(cfg.base_seed, r);
    let err = runtime(r);
    let started = Instant::now();

    let (train, test, oracle, known_propensity): (Dataset, Dataset, Option<OracleModel>, Option<f64>) = match source {
        Source::Synthetic(sc) => {
            let (train, oracle) = generate(*sc, cfg.n_train, rng::derive_seed(seed, "train")).map_err(|e| err(&e))?;
            let (test, _) = generate(*sc, cfg.n_test, rng::derive_seed(seed, "test")).map_err(|e| err(&e))?;
            let known = sc.kind.is_randomized().then_some(0.5);
            (train, test, Some(oracle), known)
        }
        Source::Csv { data, propensity } => {
            let (train, test) = split(data, cfg.train_fraction, seed).map_err(|e| err(&e))?;
            (train, test, None, *propensity)
        }
    };
    let spec = match cfg.sensitive_kind() {
        SensitiveKind::Continuous => SensitiveSpec::continuous(cfg.tau),
        SensitiveKind::Discrete => {
            let levels = match &oracle {
                Some(o) => o.sensitive_levels().expect("discrete scenario"),
                None => train.sensitive_levels(),
            };
            SensitiveSpec::discrete(levels)
        }
    }
    .map_err(|e| err(&e))?;

    let ctx = Ctx {
        cfg,
        r,
        seed,
        train: &train,
    };
    let wants = |m: MethodTag| cfg.methods.contains(&m);
    let needs_xs = oracle.is_none() || [MethodTag::Rise, MethodTag::Exp, MethodTag::PtExp].into_iter().any(wants);
    let needs_x = [MethodTag::Base, MethodTag::PtBase].into_iter().any(wants);
    let om_xs = needs_xs.then(|| ctx.outcome_model(true)).transpose()?;
    let om_x = needs_x.then(|| ctx.outcome_model(false)).transpose()?;
    let quantile = match (spec.tau(), &om_xs) {
        (Some(tau), Some(m)) => ctx.quantile_config(m, tau)?,
        _ => ctx.seeded(&cfg.learners.quantile[0], "quantile"),
    };
    let propensity = if wants(MethodTag::PtBase) || wants(MethodTag::PtExp) {
        Some(ctx.propensity(known_propensity)?)
    } else {
        None
    };
    let mut timings = vec![("shared".to_string(), started.elapsed().as_secs_f64())];

    let mut policies = Vec::new();
    for &method in MethodTag::LEARNED.iter().filter(|m| wants(**m)) {
        let t = Instant::now();
        let policy = match method {
            MethodTag::Base => fit_base_with_model(om_x.clone().expect("fitted"), rng::derive_seed(seed, "base")),
            MethodTag::Exp => {
                let om = om_xs.as_ref().expect("fitted");
                let proj = ctx.seeded(&cfg.learners.outcome[0], "projection");
                let proj = select_projection(&ctx, om, &proj)?;
                let table = exp_contrast(&train, om, &proj).map_err(|e| err(&e))?;
                ctx.classifier(method, &table)?
            }
            MethodTag::Rise => {
                let om = om_xs.as_ref().expect("fitted");
                let (gp, gm) = compute_g(&train, om, &spec, &quantile).map_err(|e| err(&e))?;
                let table = build_contrast(gp, gm).map_err(|e| err(&e))?;
                ctx.classifier(method, &table)?
            }
            MethodTag::PtBase | MethodTag::PtExp => {
                let om: &dyn OutcomeModel = if method == MethodTag::PtBase {
                    om_x.as_ref().expect("fitted")
                } else {
                    om_xs.as_ref().expect("fitted")
                };
                let prop = propensity.as_ref().expect("fitted");
                fit_pt_with_models(method, &train, om, prop, cfg.tree_depth).map_err(|e| err(&e))?
            }
            MethodTag::Oracle => unreachable!("rejected by config validation"),
        };
        timings.push((method.to_string(), t.elapsed().as_secs_f64()));
        policies.push(policy);
    }

    let t = Instant::now();
    let (em, value) = match &oracle {
        Some(o) => (
            EvalModel::oracle(*o),
            match known_propensity {
                Some(p) => ValueEstimator::Randomized { propensity: p },
                None => ValueEstimator::Observational,
            },
        ),
        None => (
            EvalModel::fitted(om_xs.clone().expect("fitted for csv runs")).map_err(|e| err(&e))?,
            match known_propensity {
                Some(p) => ValueEstimator::Randomized { propensity: p },
                None => ValueEstimator::Observational,
            },
        ),
    };
    let eval_quantile = quantile.reseeded(rng::derive_seed(seed, "eval"));
    let ectx = EvalContext::new(&em, &test, &spec, &eval_quantile).map_err(|e| err(&e))?;
    let rows = policies
        .iter()
        .map(|p| ectx.evaluate(p, &test, value).map_err(|e| err(&e)))
        .collect::<Result<Vec<_>, _>>()?;
    timings.push(("evaluation".to_string(), t.elapsed().as_secs_f64()));
    Ok(Replication {
        id: r,
        seed,
        rows,
        timings,
    })
}

/// The projection step regresses fitted means on `x`; it reuses the outcome
/// grid's first entry unless the grid is longer, in which case it is tuned
/// on the `+1` pseudo-outcomes.
fn select_projection(ctx: &Ctx, model: &TwinModel, first: &LearnerConfig) -> Result<LearnerConfig, CliError> {
    let grid = &ctx.cfg.learners.outcome;
    if grid.len() == 1 {
        return Ok(first.clone());
    }
    let x = ctx.train.x_matrix();
    let y: Vec<f64> = (0..ctx.train.len())
        .map(|i| model.predict(ctx.train.x(i), ctx.train.s(i), Action::Plus))
        .collect();
    let chosen = select(grid, |c| {
        let task = TuneTask::Mean { x: &x, y: &y, weights: None };
        cross_validate(&task, c, ctx.cfg.cv_folds, rng::derive_seed(ctx.seed, "projection"))
            .map_err(|e| ctx.err()(&e))
    })?;
    Ok(ctx.seeded(&chosen, "projection"))
}
