//! Tabular causal data: `(x, s, a, y)` rows.
//!
//! `x` holds the deployable covariates, `s` the sensitive covariates that may
//! be used for training but never by a deployed rule, `a` the binary action in
//! `{-1, +1}` and `y` the outcome (larger is better).

mod csv_io;
mod split;
mod synthetic;

pub use csv_io::{load_csv, read_csv, ActionCodes, CsvSchema, OutcomeTransform};
pub use split::{split, Standardizer};
pub use synthetic::{generate, OracleModel, ScenarioKind, SyntheticScenario};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::Matrix;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("dataset is empty")]
    Empty,

    #[error("row {row}: expected {expected} {what} values, got {got}")]
    Dimension {
        row: usize,
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}, column `{column}`: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("split with train fraction {fraction} of {n} rows leaves an empty part")]
    EmptySplit { fraction: f64, n: usize },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Binary action. The canonical encoding is `{-1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Minus,
    Plus,
}

impl Action {
    pub const BOTH: [Action; 2] = [Action::Minus, Action::Plus];

    pub fn sign(self) -> f64 {
        match self {
            Action::Minus => -1.0,
            Action::Plus => 1.0,
        }
    }

    pub fn from_sign(v: f64) -> Option<Action> {
        if v == 1.0 {
            Some(Action::Plus)
        } else if v == -1.0 {
            Some(Action::Minus)
        } else {
            None
        }
    }

    /// `1(a = +1)`.
    pub fn indicator(self) -> f64 {
        match self {
            Action::Minus => 0.0,
            Action::Plus => 1.0,
        }
    }

    pub fn flip(self) -> Action {
        match self {
            Action::Minus => Action::Plus,
            Action::Plus => Action::Minus,
        }
    }

    /// Array slot: `Minus -> 0`, `Plus -> 1`.
    pub fn index(self) -> usize {
        match self {
            Action::Minus => 0,
            Action::Plus => 1,
        }
    }
}

impl Serialize for Action {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_i8(self.sign() as i8)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let v = i8::deserialize(de)?;
        Action::from_sign(f64::from(v))
            .ok_or_else(|| serde::de::Error::custom(format!("action must be -1 or 1, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitiveKind {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub a: Action,
    pub y: f64,
}

/// An immutable, dimensionally consistent collection of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    feature_names: Vec<String>,
    sensitive_names: Vec<String>,
    s_kind: Vec<SensitiveKind>,
    /// Covariates as seen by the generating process. Synthetic data keeps them
    /// so that oracle evaluation is unaffected by standardization or by
    /// measurement error injected into the recorded `x`.
    oracle_x: Option<Vec<Vec<f64>>>,
    standardizer: Option<Standardizer>,
}

impl Dataset {
    pub fn new(
        samples: Vec<Sample>,
        feature_names: Vec<String>,
        sensitive_names: Vec<String>,
        s_kind: Vec<SensitiveKind>,
    ) -> Result<Self, DataError> {
        if samples.is_empty() {
            return Err(DataError::Empty);
        }
        if sensitive_names.len() != s_kind.len() {
            return Err(DataError::Config(format!(
                "{} sensitive names but {} sensitive kinds",
                sensitive_names.len(),
                s_kind.len()
            )));
        }
        let p = feature_names.len();
        let q = sensitive_names.len();
        for (row, smp) in samples.iter().enumerate() {
            if smp.x.len() != p {
                return Err(DataError::Dimension {
                    row,
                    what: "feature",
                    expected: p,
                    got: smp.x.len(),
                });
            }
            if smp.s.len() != q {
                return Err(DataError::Dimension {
                    row,
                    what: "sensitive",
                    expected: q,
                    got: smp.s.len(),
                });
            }
        }
        Ok(Dataset {
            samples,
            feature_names,
            sensitive_names,
            s_kind,
            oracle_x: None,
            standardizer: None,
        })
    }

    /// Attaches generator-side covariates, one vector per sample.
    pub fn with_oracle_x(mut self, oracle_x: Vec<Vec<f64>>) -> Result<Self, DataError> {
        if oracle_x.len() != self.samples.len() {
            return Err(DataError::Config(format!(
                "{} oracle rows for {} samples",
                oracle_x.len(),
                self.samples.len()
            )));
        }
        self.oracle_x = Some(oracle_x);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &Sample {
        &self.samples[i]
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.samples[i].x
    }

    pub fn s(&self, i: usize) -> &[f64] {
        &self.samples[i].s
    }

    pub fn a(&self, i: usize) -> Action {
        self.samples[i].a
    }

    pub fn y(&self, i: usize) -> f64 {
        self.samples[i].y
    }

    /// Generator-side covariates when present, else the recorded ones.
    pub fn oracle_x(&self, i: usize) -> &[f64] {
        match &self.oracle_x {
            Some(ox) => &ox[i],
            None => &self.samples[i].x,
        }
    }

    pub fn has_oracle_x(&self) -> bool {
        self.oracle_x.is_some()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn sensitive_names(&self) -> &[String] {
        &self.sensitive_names
    }

    pub fn s_kind(&self) -> &[SensitiveKind] {
        &self.s_kind
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_sensitive(&self) -> usize {
        self.sensitive_names.len()
    }

    pub fn standardizer(&self) -> Option<&Standardizer> {
        self.standardizer.as_ref()
    }

    pub fn count_action(&self, a: Action) -> usize {
        self.samples.iter().filter(|s| s.a == a).count()
    }

    pub fn outcomes(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.y).collect()
    }

    /// Row-major `n x p` matrix of the deployable covariates.
    pub fn x_matrix(&self) -> Matrix {
        self.matrix_of(|_, smp, out| out.extend_from_slice(&smp.x))
    }

    /// `n x (p + q)` matrix of `(x, s)`.
    pub fn xs_matrix(&self) -> Matrix {
        self.matrix_of(|_, smp, out| {
            out.extend_from_slice(&smp.x);
            out.extend_from_slice(&smp.s);
        })
    }

    fn matrix_of(&self, fill: impl Fn(usize, &Sample, &mut Vec<f64>)) -> Matrix {
        let mut data = Vec::new();
        for (i, smp) in self.samples.iter().enumerate() {
            fill(i, smp, &mut data);
        }
        let rows = self.samples.len();
        let cols = data.len() / rows;
        Matrix::new(rows, cols, data).expect("consistent dimensions")
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset, DataError> {
        if indices.is_empty() {
            return Err(DataError::Empty);
        }
        Ok(Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            sensitive_names: self.sensitive_names.clone(),
            s_kind: self.s_kind.clone(),
            oracle_x: self
                .oracle_x
                .as_ref()
                .map(|ox| indices.iter().map(|&i| ox[i].clone()).collect()),
            standardizer: self.standardizer.clone(),
        })
    }

    /// Applies a fitted standardizer to `x` (never to `s`, `y`, or the
    /// oracle covariates).
    pub fn standardized(&self, st: &Standardizer) -> Dataset {
        let mut out = self.clone();
        for smp in &mut out.samples {
            st.apply(&mut smp.x);
        }
        out.standardizer = Some(st.clone());
        out
    }

    /// Distinct observed values of every sensitive coordinate, sorted.
    pub fn sensitive_levels(&self) -> Vec<Vec<f64>> {
        (0..self.n_sensitive())
            .map(|j| {
                let mut vals: Vec<f64> = self.samples.iter().map(|s| s.s[j]).collect();
                vals.sort_by(f64::total_cmp);
                vals.dedup();
                vals
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(x: f64, s: f64, a: Action, y: f64) -> Sample {
        Sample {
            x: vec![x],
            s: vec![s],
            a,
            y,
        }
    }

    #[test]
    fn rejects_ragged_rows() {
        let bad = vec![
            sample(0.1, 0.0, Action::Plus, 1.0),
            Sample {
                x: vec![0.1, 0.2],
                s: vec![0.0],
                a: Action::Minus,
                y: 0.0,
            },
        ];
        let err = Dataset::new(
            bad,
            vec!["x".into()],
            vec!["s".into()],
            vec![SensitiveKind::Discrete],
        )
        .unwrap_err();
        assert!(matches!(err, DataError::Dimension { row: 1, .. }));
    }

    #[test]
    fn rejects_empty() {
        assert!(matches!(
            Dataset::new(vec![], vec![], vec![], vec![]),
            Err(DataError::Empty)
        ));
    }

    #[test]
    fn action_encoding() {
        assert_eq!(Action::from_sign(-1.0), Some(Action::Minus));
        assert_eq!(Action::from_sign(0.0), None);
        assert_eq!(Action::Plus.indicator(), 1.0);
        assert_eq!(Action::Minus.flip(), Action::Plus);
        let json = serde_json::to_string(&Action::Minus).unwrap();
        assert_eq!(json, "-1");
        assert!(serde_json::from_str::<Action>("0").is_err());
    }

    #[test]
    fn levels_are_sorted_and_distinct() {
        let ds = Dataset::new(
            vec![
                sample(0.1, 1.0, Action::Plus, 1.0),
                sample(0.2, 0.0, Action::Minus, 1.0),
                sample(0.3, 1.0, Action::Minus, 1.0),
            ],
            vec!["x".into()],
            vec!["s".into()],
            vec![SensitiveKind::Discrete],
        )
        .unwrap();
        assert_eq!(ds.sensitive_levels(), vec![vec![0.0, 1.0]]);
        let m = ds.xs_matrix();
        assert_eq!((m.rows(), m.cols()), (3, 2));
        assert_eq!(m.row(2), &[0.3, 1.0]);
    }
}
