//! Decision rules `d: x -> {-1, +1}` and the learners that build them.
//!
//! The robust learner ([`fit_rise`]) scores each training unit under both
//! arms with a risk functional `G` of the fitted conditional mean across the
//! sensitive variable, then fits a weighted classifier on `x` with label
//! `sgn(g1 - g2)` and weight `|g1 - g2|`. [`fit_exp`] does the same with the
//! conditional mean over `s` in place of `G`, and [`fit_base`] ignores `s`.

mod contrast;
mod methods;
mod outcome;

pub use contrast::{
    build_contrast, classification_loss, compute_g, empirical_objective, ContrastTable, LevelProduct,
};
pub use methods::{
    exp_contrast, fit_base, fit_base_with_model, fit_contrast_classifier, fit_exp, fit_exp_with_model, fit_rise,
    fit_rise_with_model,
};
pub use outcome::{fit_outcome_models, OutcomeModel, TwinModel};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::data::{Action, DataError, Dataset};
use crate::learners::{LearnError, Predictor};
use crate::rng;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Learn(#[from] LearnError),

    #[error(transparent)]
    Data(#[from] DataError),

    #[error("no training rows with action {0:?}")]
    MissingArm(Action),

    #[error("arm {arm:?} has {got} rows, fewer than its {needed} inputs")]
    TooFewInArm { arm: Action, needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

pub const DEFAULT_LEVEL_CAP: usize = 4096;
pub const DEFAULT_TAU: f64 = 0.25;

/// How the sensitive variable is summarized across its support: the
/// infimum over a finite level product (discrete), or a conditional
/// `tau`-quantile (continuous).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SensitiveSpec {
    Discrete {
        /// One sorted level set per sensitive variable.
        levels: Vec<Vec<f64>>,
        #[serde(default = "default_cap")]
        cap: usize,
    },
    Continuous {
        #[serde(default = "default_tau")]
        tau: f64,
    },
}

fn default_cap() -> usize {
    DEFAULT_LEVEL_CAP
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

impl SensitiveSpec {
    pub fn discrete(levels: Vec<Vec<f64>>) -> Result<Self, PolicyError> {
        let spec = SensitiveSpec::Discrete {
            levels,
            cap: DEFAULT_LEVEL_CAP,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn continuous(tau: f64) -> Result<Self, PolicyError> {
        let spec = SensitiveSpec::Continuous { tau };
        spec.validate()?;
        Ok(spec)
    }

    /// Discrete spec over the observed levels of every sensitive column, or
    /// a continuous spec at `tau`, following the dataset's declared kind.
    pub fn from_dataset(ds: &Dataset, tau: f64) -> Result<Self, PolicyError> {
        use crate::data::SensitiveKind;
        let kinds = ds.s_kind();
        if kinds.iter().all(|k| *k == SensitiveKind::Discrete) {
            SensitiveSpec::discrete(ds.sensitive_levels())
        } else if kinds.iter().all(|k| *k == SensitiveKind::Continuous) {
            SensitiveSpec::continuous(tau)
        } else {
            Err(PolicyError::Config(
                "mixed discrete and continuous sensitive variables are not supported".into(),
            ))
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        match self {
            SensitiveSpec::Discrete { levels, .. } => {
                if levels.is_empty() || levels.iter().any(Vec::is_empty) {
                    return Err(PolicyError::Config("every discrete level set must be non-empty".into()));
                }
                if levels.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(PolicyError::Config("levels must be finite".into()));
                }
            }
            SensitiveSpec::Continuous { tau } => {
                if !(*tau > 0.0 && *tau < 1.0) {
                    return Err(PolicyError::Config(format!("tau must lie in (0, 1), got {tau}")));
                }
            }
        }
        Ok(())
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, SensitiveSpec::Discrete { .. })
    }

    pub fn tau(&self) -> Option<f64> {
        match self {
            SensitiveSpec::Continuous { tau } => Some(*tau),
            SensitiveSpec::Discrete { .. } => None,
        }
    }

    /// Cartesian product of the level sets; fails above the cap.
    pub fn level_product(&self) -> Result<LevelProduct, PolicyError> {
        match self {
            SensitiveSpec::Discrete { levels, cap } => LevelProduct::new(levels, *cap),
            SensitiveSpec::Continuous { .. } => {
                Err(PolicyError::Config("continuous sensitive variables have no level product".into()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodTag {
    Base,
    Exp,
    PtBase,
    PtExp,
    Rise,
    Oracle,
}

impl MethodTag {
    /// Report order.
    pub const LEARNED: [MethodTag; 5] = [
        MethodTag::Base,
        MethodTag::Exp,
        MethodTag::PtBase,
        MethodTag::PtExp,
        MethodTag::Rise,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodTag::Base => "base",
            MethodTag::Exp => "exp",
            MethodTag::PtBase => "pt_base",
            MethodTag::PtExp => "pt_exp",
            MethodTag::Rise => "rise",
            MethodTag::Oracle => "oracle",
        }
    }

    /// Display label used in summary tables.
    pub fn label(self) -> &'static str {
        match self {
            MethodTag::Base => "Base",
            MethodTag::Exp => "Exp",
            MethodTag::PtBase => "PT-Base",
            MethodTag::PtExp => "PT-Exp",
            MethodTag::Rise => "RISE",
            MethodTag::Oracle => "Oracle",
        }
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodTag {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "base" => MethodTag::Base,
            "exp" => MethodTag::Exp,
            "pt_base" => MethodTag::PtBase,
            "pt_exp" => MethodTag::PtExp,
            "rise" => MethodTag::Rise,
            "oracle" => MethodTag::Oracle,
            other => return Err(PolicyError::Config(format!("unknown method `{other}`"))),
        })
    }
}

/// A real-valued score on `x`; positive favours `+1`.
pub trait ScoreFunction: Send + Sync + fmt::Debug {
    fn score(&self, x: &[f64]) -> f64;

    /// Structured description with flattened parameters, for audit output.
    fn export(&self) -> serde_json::Value;
}

/// Score of a weighted classifier.
#[derive(Debug, Clone)]
pub struct ClassifierScore(pub Predictor);

impl ScoreFunction for ClassifierScore {
    fn score(&self, x: &[f64]) -> f64 {
        self.0.predict(x)
    }

    fn export(&self) -> serde_json::Value {
        json!({ "scorer": "classifier", "predictor": self.0 })
    }
}

/// `mu_+(x) - mu_-(x)` from per-arm regressions on `x`.
#[derive(Debug, Clone)]
pub struct ArmDifference {
    pub plus: Predictor,
    pub minus: Predictor,
}

impl ScoreFunction for ArmDifference {
    fn score(&self, x: &[f64]) -> f64 {
        self.plus.predict(x) - self.minus.predict(x)
    }

    fn export(&self) -> serde_json::Value {
        json!({ "scorer": "arm_difference", "plus": self.plus, "minus": self.minus })
    }
}

/// No signal: every decision is a tie.
#[derive(Debug, Clone, Copy)]
pub struct ZeroScore;

impl ScoreFunction for ZeroScore {
    fn score(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn export(&self) -> serde_json::Value {
        json!({ "scorer": "zero" })
    }
}

/// How a plug-in rule summarizes an outcome model across discrete `s`.
#[derive(Debug, Clone)]
pub enum PlugInRule {
    /// Infimum over every level combination.
    Infimum(LevelProduct),
    /// Expectation under a fixed distribution over level combinations.
    Mean { levels: LevelProduct, probs: Vec<f64> },
}

/// Plug-in rule `sgn(G_+(x) - G_-(x))` computed directly from an outcome
/// model; with the generating model injected this is the population-optimal
/// rule for the chosen criterion.
#[derive(Clone)]
pub struct PlugInScore {
    pub model: Arc<dyn OutcomeModel>,
    pub rule: PlugInRule,
}

impl fmt::Debug for PlugInScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlugInScore").field("rule", &self.rule).finish()
    }
}

impl PlugInScore {
    pub fn arm_value(&self, x: &[f64], a: Action) -> f64 {
        match &self.rule {
            PlugInRule::Infimum(levels) => levels
                .iter()
                .map(|s| self.model.predict(x, s, a))
                .fold(f64::INFINITY, f64::min),
            PlugInRule::Mean { levels, probs } => levels
                .iter()
                .zip(probs)
                .map(|(s, p)| p * self.model.predict(x, s, a))
                .sum(),
        }
    }
}

impl ScoreFunction for PlugInScore {
    fn score(&self, x: &[f64]) -> f64 {
        self.arm_value(x, Action::Plus) - self.arm_value(x, Action::Minus)
    }

    fn export(&self) -> serde_json::Value {
        let rule = match &self.rule {
            PlugInRule::Infimum(_) => "infimum",
            PlugInRule::Mean { .. } => "mean",
        };
        json!({ "scorer": "plug_in", "rule": rule })
    }
}

/// A deployable decision rule. It reads `x` only; a zero score is broken by
/// a coin seeded from `(tie_seed, x)`, so decisions are reproducible and
/// independent of call order or thread.
#[derive(Debug, Clone)]
pub struct Policy {
    method: MethodTag,
    scorer: Arc<dyn ScoreFunction>,
    tie_seed: u64,
}

impl Policy {
    pub fn new(method: MethodTag, scorer: Arc<dyn ScoreFunction>, tie_seed: u64) -> Policy {
        Policy {
            method,
            scorer,
            tie_seed,
        }
    }

    /// Plug-in rule from an outcome model, tagged as an oracle.
    pub fn plug_in(model: Arc<dyn OutcomeModel>, rule: PlugInRule, tie_seed: u64) -> Policy {
        Policy::new(MethodTag::Oracle, Arc::new(PlugInScore { model, rule }), tie_seed)
    }

    /// Always `a`.
    pub fn constant(method: MethodTag, a: Action) -> Policy {
        #[derive(Debug)]
        struct Constant(f64);
        impl ScoreFunction for Constant {
            fn score(&self, _x: &[f64]) -> f64 {
                self.0
            }
            fn export(&self) -> serde_json::Value {
                json!({ "scorer": "constant", "action": self.0 })
            }
        }
        Policy::new(method, Arc::new(Constant(a.sign())), 0)
    }

    pub fn method(&self) -> MethodTag {
        self.method
    }

    pub fn tie_seed(&self) -> u64 {
        self.tie_seed
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.scorer.score(x)
    }

    pub fn decide(&self, x: &[f64]) -> Action {
        let f = self.scorer.score(x);
        if f > 0.0 {
            Action::Plus
        } else if f < 0.0 {
            Action::Minus
        } else if rng::hash_point(self.tie_seed, x) & 1 == 1 {
            Action::Plus
        } else {
            Action::Minus
        }
    }

    pub fn decide_all(&self, ds: &Dataset) -> Vec<Action> {
        (0..ds.len()).map(|i| self.decide(ds.x(i))).collect()
    }

    pub fn export(&self) -> serde_json::Value {
        json!({
            "method": self.method,
            "tie_seed": self.tie_seed,
            "score": self.scorer.export(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_scores_are_seeded_coins() {
        let p = Policy::new(MethodTag::Rise, Arc::new(ZeroScore), 42);
        let xs: Vec<[f64; 1]> = (0..400).map(|i| [i as f64 / 400.0]).collect();
        let plus = xs.iter().filter(|x| p.decide(&x[..]) == Action::Plus).count();
        assert!(plus > 150 && plus < 250, "{plus}");
        // reproducible per x
        assert!(xs.iter().all(|x| p.decide(&x[..]) == p.decide(&x[..])));
        let q = Policy::new(MethodTag::Rise, Arc::new(ZeroScore), 43);
        assert!(xs.iter().any(|x| p.decide(&x[..]) != q.decide(&x[..])));
    }

    #[test]
    fn spec_validation() {
        assert!(SensitiveSpec::continuous(0.0).is_err());
        assert!(SensitiveSpec::continuous(1.0).is_err());
        assert!(SensitiveSpec::discrete(vec![vec![]]).is_err());
        assert!(SensitiveSpec::discrete(vec![]).is_err());
        let cap = SensitiveSpec::Discrete {
            levels: vec![(0..100).map(f64::from).collect(); 2],
            cap: 4096,
        };
        assert!(matches!(cap.level_product(), Err(PolicyError::Config(_))));
    }

    #[test]
    fn method_tags_roundtrip() {
        for m in MethodTag::LEARNED {
            assert_eq!(m.as_str().parse::<MethodTag>().unwrap(), m);
        }
        assert!("nope".parse::<MethodTag>().is_err());
    }
}
