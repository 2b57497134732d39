//! CSV ingestion with a declarative column mapping.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Action, DataError, Dataset, Sample, SensitiveKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeTransform {
    #[default]
    None,
    /// `y -> ln(y + 1)`.
    Log1p,
}

impl OutcomeTransform {
    pub fn apply(self, y: f64) -> f64 {
        match self {
            OutcomeTransform::None => y,
            OutcomeTransform::Log1p => y.ln_1p(),
        }
    }
}

/// Raw action cell text to canonical action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionCodes(pub BTreeMap<String, i8>);

impl Default for ActionCodes {
    fn default() -> Self {
        ActionCodes(
            [("0", -1), ("1", 1), ("-1", -1)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        )
    }
}

impl ActionCodes {
    fn lookup(&self, cell: &str) -> Option<Action> {
        let cell = cell.trim();
        if let Some(&v) = self.0.get(cell) {
            return Action::from_sign(f64::from(v));
        }
        // "1.0" matches the code "1"
        let num: f64 = cell.parse().ok()?;
        self.0
            .iter()
            .find(|(k, _)| k.parse::<f64>().ok() == Some(num))
            .and_then(|(_, &v)| Action::from_sign(f64::from(v)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    /// Deployable covariates. Empty means every column not mapped elsewhere.
    #[serde(default)]
    pub features: Vec<String>,
    pub sensitive: Vec<String>,
    pub sensitive_kind: SensitiveKind,
    pub action: String,
    #[serde(default)]
    pub action_codes: ActionCodes,
    pub outcome: String,
    #[serde(default)]
    pub outcome_transform: OutcomeTransform,
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path)?;
    read_csv(file, schema)
}

/// Parses CSV text (header row required). Row numbers in errors are 1-based
/// data rows, not counting the header.
pub fn read_csv(reader: impl Read, schema: &CsvSchema) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };

    if schema.sensitive.is_empty() {
        return Err(DataError::Config("at least one sensitive column is required".into()));
    }
    let features: Vec<String> = if schema.features.is_empty() {
        header
            .iter()
            .filter(|h| {
                **h != schema.action && **h != schema.outcome && !schema.sensitive.contains(h)
            })
            .cloned()
            .collect()
    } else {
        schema.features.clone()
    };
    let feat_idx = features.iter().map(|f| col(f)).collect::<Result<Vec<_>, _>>()?;
    let sens_idx = schema
        .sensitive
        .iter()
        .map(|f| col(f))
        .collect::<Result<Vec<_>, _>>()?;
    let act_idx = col(&schema.action)?;
    let out_idx = col(&schema.outcome)?;

    let mut samples = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = r + 1;
        let num = |j: usize| -> Result<f64, DataError> {
            let cell = rec.get(j).unwrap_or("");
            cell.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| DataError::Cell {
                    row,
                    column: header[j].clone(),
                    message: format!("non-numeric value `{cell}`"),
                })
        };
        let x = feat_idx.iter().map(|&j| num(j)).collect::<Result<Vec<_>, _>>()?;
        let s = sens_idx.iter().map(|&j| num(j)).collect::<Result<Vec<_>, _>>()?;
        let a_cell = rec.get(act_idx).unwrap_or("");
        let a = schema.action_codes.lookup(a_cell).ok_or_else(|| DataError::Cell {
            row,
            column: header[act_idx].clone(),
            message: format!("unknown action code `{a_cell}`"),
        })?;
        let y = schema.outcome_transform.apply(num(out_idx)?);
        if !y.is_finite() {
            return Err(DataError::Cell {
                row,
                column: header[out_idx].clone(),
                message: "outcome transform produced a non-finite value".into(),
            });
        }
        samples.push(Sample { x, s, a, y });
    }
    Dataset::new(
        samples,
        features,
        schema.sensitive.clone(),
        vec![schema.sensitive_kind; schema.sensitive.len()],
    )
}
