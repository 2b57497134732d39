//! Benchmark runner: config loading, replications, artifacts.

pub mod config;
pub mod pipeline;
pub mod report;

use rise_core::eval::{aggregate, AggregateReport};

use config::RunConfig;
use pipeline::{run_replication, Replication, Source};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

/// Runs every replication of `cfg` (on `cfg.parallelism` threads) and
/// returns them in replication order with their aggregate.
pub fn run_all(cfg: &RunConfig) -> Result<(Vec<Replication>, AggregateReport), CliError> {
    cfg.validate()?;
    let source = Source::from_config(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let reps: Vec<Replication> = pool.install(|| {
        use rayon::prelude::*;
        (0..cfg.replications)
            .into_par_iter()
            .map(|r| {
                let rep = run_replication(cfg, &source, r);
                if let Ok(rep) = &rep {
                    log::info!("replication {r} done ({} methods)", rep.rows.len());
                }
                rep
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let rows: Vec<_> = reps.iter().map(|r| r.rows.clone()).collect();
    let report = aggregate(&rows).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok((reps, report))
}

/// [`run_all`] followed by writing the artifacts to `cfg.output_dir`.
pub fn execute(cfg: &RunConfig) -> Result<AggregateReport, CliError> {
    cfg.validate()?;
    // fail before any fitting if the artifacts cannot be written
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", cfg.output_dir.display())))?;
    let (reps, report) = run_all(cfg)?;
    report::write_outputs(&cfg.output_dir, cfg, &reps, &report)?;
    Ok(report)
}
