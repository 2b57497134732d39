use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EvalError, MetricsRow};
use crate::policy::MethodTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Objective,
    Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    All,
    Vulnerable,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Objective, Metric::Value];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Objective => "objective",
            Metric::Value => "value",
        }
    }
}

impl Group {
    pub const ALL: [Group; 2] = [Group::All, Group::Vulnerable];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::All => "all",
            Group::Vulnerable => "vulnerable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCell {
    pub method: MethodTag,
    pub metric: Metric,
    pub group: Group,
    pub mean: f64,
    /// Sample standard deviation over replications divided by `sqrt(count)`.
    pub se: f64,
    /// Replications in which the cell was defined.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub replications: usize,
    /// Ordered by method, then metric (objective, value), then group.
    pub cells: Vec<AggregateCell>,
    pub warnings: Vec<String>,
}

impl AggregateReport {
    pub fn cell(&self, method: MethodTag, metric: Metric, group: Group) -> Option<&AggregateCell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.metric == metric && c.group == group)
    }

    pub fn mean(&self, method: MethodTag, metric: Metric, group: Group) -> Option<f64> {
        self.cell(method, metric, group).map(|c| c.mean)
    }

    pub fn methods(&self) -> Vec<MethodTag> {
        let mut m: Vec<MethodTag> = self.cells.iter().map(|c| c.method).collect();
        m.dedup();
        m
    }
}

/// Per-cell mean and standard error over replications (one inner vector of
/// rows per replication). Cells undefined in every replication are omitted.
pub fn aggregate(replications: &[Vec<MetricsRow>]) -> Result<AggregateReport, EvalError> {
    let first = replications.first().ok_or(EvalError::NoReplications)?;
    let method_set = |rows: &[MetricsRow]| {
        let mut m: Vec<MethodTag> = rows.iter().map(|r| r.method).collect();
        m.sort();
        m
    };
    let expected = method_set(first);
    let mut samples: BTreeMap<(MethodTag, Metric, Group), Vec<f64>> = BTreeMap::new();
    for (r, rows) in replications.iter().enumerate() {
        let got = method_set(rows);
        if got != expected {
            return Err(EvalError::InconsistentMethods {
                replication: r,
                expected,
                got,
            });
        }
        for row in rows {
            for metric in Metric::ALL {
                for group in Group::ALL {
                    if let Some(v) = row.get(metric, group) {
                        samples.entry((row.method, metric, group)).or_default().push(v);
                    }
                }
            }
        }
    }
    let mut warnings = Vec::new();
    if replications.len() == 1 {
        warnings.push("a single replication: standard errors are reported as 0".to_string());
    }
    let cells = samples
        .into_iter()
        .map(|((method, metric, group), v)| {
            let count = v.len();
            let mean = v.iter().sum::<f64>() / count as f64;
            let se = if count > 1 {
                let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
                (var / count as f64).sqrt()
            } else {
                0.0
            };
            AggregateCell {
                method,
                metric,
                group,
                mean,
                se,
                count,
            }
        })
        .collect();
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(AggregateReport {
        replications: replications.len(),
        cells,
        warnings,
    })
}
