//! Run artifacts and the plain-text summary table.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rise_core::eval::{AggregateReport, Group, Metric, MetricsRow};
use rise_core::MethodTag;
use serde::Serialize;

use crate::config::RunConfig;
use crate::pipeline::Replication;
use crate::CliError;

pub const RESULTS_FILE: &str = "results.jsonl";
pub const TIMINGS_FILE: &str = "timings.jsonl";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Serialize)]
struct ResultRecord<'a> {
    replication: usize,
    seed: u64,
    #[serde(flatten)]
    metrics: &'a MetricsRow,
}

#[derive(Serialize)]
struct TimingRecord<'a> {
    replication: usize,
    stage: &'a str,
    seconds: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a RunConfig,
    seeds: Vec<u64>,
    build: Build,
}

#[derive(Serialize)]
struct Build {
    package: &'static str,
    version: &'static str,
    debug_assertions: bool,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))
}

fn write_file(path: &Path, body: &[u8]) -> Result<(), CliError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(body).map_err(io_err(path))
}

/// Writes `results.jsonl`, `timings.jsonl`, `aggregate.csv` and
/// `manifest.json` into `dir`. Everything except the timings is a pure
/// function of the config and the build.
pub fn write_outputs(
    dir: &Path,
    cfg: &RunConfig,
    reps: &[Replication],
    report: &AggregateReport,
) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut results = String::new();
    let mut timings = String::new();
    for rep in reps {
        for row in &rep.rows {
            results.push_str(&json_line(&ResultRecord {
                replication: rep.id,
                seed: rep.seed,
                metrics: row,
            }));
        }
        for (stage, seconds) in &rep.timings {
            timings.push_str(&json_line(&TimingRecord {
                replication: rep.id,
                stage,
                seconds: *seconds,
            }));
        }
    }
    write_file(&dir.join(RESULTS_FILE), results.as_bytes())?;
    write_file(&dir.join(TIMINGS_FILE), timings.as_bytes())?;
    write_file(&dir.join(AGGREGATE_FILE), aggregate_csv(report).as_bytes())?;

    let manifest = Manifest {
        config: cfg,
        seeds: reps.iter().map(|r| r.seed).collect(),
        build: Build {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            debug_assertions: cfg!(debug_assertions),
        },
    };
    let body = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&dir.join(MANIFEST_FILE), body.as_bytes())
}

fn json_line<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string(v).expect("records serialize");
    s.push('\n');
    s
}

pub fn aggregate_csv(report: &AggregateReport) -> String {
    let mut out = String::from("method,metric,group,mean,se\n");
    for c in &report.cells {
        let _ = writeln!(out, "{},{},{},{},{}", c.method, c.metric.as_str(), c.group.as_str(), c.mean, c.se);
    }
    out
}

/// Three significant digits.
pub fn format_mean(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.2}");
    }
    let mag = v.abs().log10().floor() as i32;
    let mut decimals = (2 - mag).max(0);
    let rounded: f64 = format!("{v:.*}", decimals as usize).parse().unwrap_or(v);
    // 9.996 rounds to 10.00: one digit too many
    if rounded != 0.0 && rounded.abs().log10().floor() as i32 > mag && decimals > 0 {
        decimals -= 1;
    }
    format!("{v:.*}", decimals as usize)
}

pub fn format_cell(mean: f64, se: f64) -> String {
    format!("{} ({:.2})", format_mean(mean), se)
}

const COLUMNS: [(Metric, Group, &str); 4] = [
    (Metric::Objective, Group::All, "Obj. (all)"),
    (Metric::Objective, Group::Vulnerable, "Obj. (vulnerable)"),
    (Metric::Value, Group::All, "Value (all)"),
    (Metric::Value, Group::Vulnerable, "Value (vulnerable)"),
];

/// Renders an aggregate CSV as a fixed-width table of `mean (se)` cells,
/// one row per method; undefined cells show `-`.
pub fn summarize(text: &str) -> Result<String, CliError> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| CliError::Config(format!("line 1: {e}")))?
        .clone();
    if header.iter().collect::<Vec<_>>() != ["method", "metric", "group", "mean", "se"] {
        return Err(CliError::Config(
            "line 1: expected header `method,metric,group,mean,se`".into(),
        ));
    }
    let mut cells: Vec<(MethodTag, Metric, Group, f64, f64)> = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| CliError::Config(format!("line {line}: {e}")))?;
        let bad = |what: &str| CliError::Config(format!("line {line}: bad {what}"));
        if rec.len() != 5 {
            return Err(bad("field count"));
        }
        let method: MethodTag = rec[0].trim().parse().map_err(|_| bad("method"))?;
        let metric = match rec[1].trim() {
            "objective" => Metric::Objective,
            "value" => Metric::Value,
            _ => return Err(bad("metric")),
        };
        let group = match rec[2].trim() {
            "all" => Group::All,
            "vulnerable" => Group::Vulnerable,
            _ => return Err(bad("group")),
        };
        let mean: f64 = rec[3].trim().parse().map_err(|_| bad("mean"))?;
        let se: f64 = rec[4].trim().parse().map_err(|_| bad("se"))?;
        cells.push((method, metric, group, mean, se));
    }
    let mut methods: Vec<MethodTag> = cells.iter().map(|c| c.0).collect();
    methods.sort();
    methods.dedup();

    let mut rows: Vec<Vec<String>> = vec![std::iter::once("IDR".to_string())
        .chain(COLUMNS.iter().map(|c| c.2.to_string()))
        .collect()];
    for m in methods {
        let mut row = vec![m.label().to_string()];
        for (metric, group, _) in COLUMNS {
            let cell = cells
                .iter()
                .find(|c| c.0 == m && c.1 == metric && c.2 == group)
                .map_or_else(|| "-".to_string(), |c| format_cell(c.3, c.4));
            row.push(cell);
        }
        rows.push(row);
    }
    let widths: Vec<usize> = (0..=COLUMNS.len())
        .map(|j| rows.iter().map(|r| r[j].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    Ok(out)
}
