use std::path::{Path, PathBuf};

use rise_core::data::{CsvSchema, ScenarioKind};
use rise_core::learners::{default_grid, LearnerConfig};
use rise_core::{MethodTag, SensitiveKind};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// CSV input: the file, its column mapping and, for randomized studies, the
/// known probability of `+1` (enables the IPW value estimate).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSource {
    pub path: PathBuf,
    pub schema: CsvSchema,
    #[serde(default)]
    pub propensity: Option<f64>,
}

/// Hyperparameter grids, one per learner role. A single-entry grid is used
/// as is; longer grids are tuned by k-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerGrids {
    #[serde(default = "default_grid")]
    pub outcome: Vec<LearnerConfig>,
    #[serde(default = "default_grid")]
    pub quantile: Vec<LearnerConfig>,
    #[serde(default = "default_grid")]
    pub classifier: Vec<LearnerConfig>,
    #[serde(default = "linear_only")]
    pub propensity: Vec<LearnerConfig>,
}

fn linear_only() -> Vec<LearnerConfig> {
    vec![LearnerConfig::linear()]
}

impl Default for LearnerGrids {
    fn default() -> Self {
        LearnerGrids {
            outcome: default_grid(),
            quantile: default_grid(),
            classifier: default_grid(),
            propensity: linear_only(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scenario: Option<ScenarioKind>,
    #[serde(default)]
    pub csv: Option<CsvSource>,
    #[serde(default = "default_s_kind")]
    pub s_kind: SensitiveKind,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
    #[serde(default = "default_n_train")]
    pub n_train: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodTag>,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_tree_depth")]
    pub tree_depth: usize,
    #[serde(default = "default_cv_folds")]
    pub cv_folds: usize,
    #[serde(default)]
    pub learners: LearnerGrids,
}

fn default_s_kind() -> SensitiveKind {
    SensitiveKind::Discrete
}
fn default_tau() -> f64 {
    0.25
}
fn default_noise_sd() -> f64 {
    1.0
}
fn default_n_train() -> usize {
    8000
}
fn default_n_test() -> usize {
    2000
}
fn default_train_fraction() -> f64 {
    0.8
}
/// Desk-scale default; `--full` runs 100.
fn default_replications() -> usize {
    20
}
fn default_methods() -> Vec<MethodTag> {
    MethodTag::LEARNED.to_vec()
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("rise-out")
}
fn default_parallelism() -> usize {
    1
}
fn default_tree_depth() -> usize {
    2
}
fn default_cv_folds() -> usize {
    5
}

impl RunConfig {
    /// A synthetic-scenario config with every other field at its default.
    pub fn synthetic(scenario: ScenarioKind, s_kind: SensitiveKind) -> RunConfig {
        let mut cfg: RunConfig = toml::from_str("").expect("all fields have defaults");
        cfg.scenario = Some(scenario);
        cfg.s_kind = s_kind;
        cfg
    }

    pub fn from_toml(text: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string().replace('\n', " ")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML config, or the `config` object of a previous run's
    /// `manifest.json`.
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            #[derive(Deserialize)]
            struct Manifest {
                config: RunConfig,
            }
            let m: Manifest = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            m.config.validate()?;
            return Ok(m.config);
        }
        RunConfig::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        match (&self.scenario, &self.csv) {
            (Some(_), Some(_)) => return bad("set either `scenario` or a [csv] block, not both".into()),
            (None, None) => return bad("one of `scenario` or a [csv] block is required".into()),
            _ => {}
        }
        if self.methods.is_empty() {
            return bad("`methods` must not be empty".into());
        }
        if self.methods.contains(&MethodTag::Oracle) {
            return bad("`oracle` is not a learnable method".into());
        }
        if self.replications == 0 {
            return bad("`replications` must be at least 1".into());
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad(format!("`tau` must lie in (0, 1), got {}", self.tau));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("`train_fraction` must lie in (0, 1), got {}", self.train_fraction));
        }
        if self.scenario.is_some() && (self.n_train < 2 || self.n_test < 1) {
            return bad("`n_train` must be at least 2 and `n_test` at least 1".into());
        }
        if self.parallelism == 0 {
            return bad("`parallelism` must be at least 1".into());
        }
        if !(1..=2).contains(&self.tree_depth) {
            return bad(format!("`tree_depth` must be 1 or 2, got {}", self.tree_depth));
        }
        if self.cv_folds < 2 {
            return bad("`cv_folds` must be at least 2".into());
        }
        if let Some(csv) = &self.csv {
            if csv.propensity.is_some_and(|p| !(p > 0.0 && p < 1.0)) {
                return bad("csv `propensity` must lie in (0, 1)".into());
            }
        }
        let grids = [
            ("outcome", &self.learners.outcome),
            ("quantile", &self.learners.quantile),
            ("classifier", &self.learners.classifier),
            ("propensity", &self.learners.propensity),
        ];
        for (name, grid) in grids {
            if grid.is_empty() {
                return bad(format!("learner grid `{name}` is empty"));
            }
            for c in grid {
                c.validate().map_err(|e| CliError::Config(format!("learner grid `{name}`: {e}")))?;
            }
        }
        Ok(())
    }

    pub fn sensitive_kind(&self) -> SensitiveKind {
        match &self.csv {
            Some(csv) => csv.schema.sensitive_kind,
            None => self.s_kind,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_toml() {
        let cfg = RunConfig::from_toml("scenario = \"example1\"\nmethods = [\"rise\"]\nreplications = 2\n").unwrap();
        assert_eq!(cfg.scenario, Some(ScenarioKind::Example1));
        assert_eq!((cfg.n_train, cfg.n_test, cfg.tau), (8000, 2000, 0.25));
        assert_eq!(cfg.learners.outcome.len(), 17);
    }

    #[test]
    fn grids_as_arrays_of_tables() {
        let cfg = RunConfig::from_toml(
            r#"
scenario = "example2"
s_kind = "continuous"

[[learners.outcome]]
family = "linear"

[[learners.outcome]]
hidden_layers = [16, 16]
epochs = 10
"#,
        )
        .unwrap();
        assert_eq!(cfg.learners.outcome.len(), 2);
        assert_eq!(cfg.learners.outcome[1].hidden_layers, vec![16, 16]);
        assert_eq!(cfg.sensitive_kind(), SensitiveKind::Continuous);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "",
            "scenario = \"example1\"\nmethods = []",
            "scenario = \"example1\"\nreplications = 0",
            "scenario = \"example1\"\ntau = 1.5",
            "scenario = \"example1\"\nbogus = 1",
            "scenario = \"example9\"",
            "scenario = \"example1\"\nmethods = [\"oracle\"]",
            "scenario = \"example1\"\n[[learners.outcome]]\nepochs = 0",
        ] {
            assert!(matches!(RunConfig::from_toml(text), Err(CliError::Config(_))), "{text:?}");
        }
    }
}
