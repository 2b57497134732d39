use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rise_cli::config::RunConfig;
use rise_cli::report::{aggregate_csv, summarize, AGGREGATE_FILE};
use rise_cli::{execute, CliError};

const FULL_REPLICATIONS: usize = 100;

#[derive(Parser)]
#[command(name = "rise-bench", version, about = "Robust individualized decision rules: benchmark runner")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit and evaluate every configured method over replications.
    Run {
        /// TOML config, or a previous run's manifest.json.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        parallel: Option<usize>,
        /// Run the full 100 replications instead of the desk default.
        #[arg(long, conflicts_with = "reps")]
        full: bool,
    },
    /// Print an aggregate.csv as a table.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn run(args: Args) -> Result<(), CliError> {
    match args.command {
        Command::Run {
            config,
            reps,
            seed,
            out,
            parallel,
            full,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(r) = reps {
                cfg.replications = r;
            }
            if full {
                cfg.replications = FULL_REPLICATIONS;
            }
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            if let Some(p) = parallel {
                cfg.parallelism = p;
            }
            let report = execute(&cfg)?;
            print!("{}", summarize(&aggregate_csv(&report))?);
            eprintln!("wrote {}", cfg.output_dir.join(AGGREGATE_FILE).display());
            Ok(())
        }
        Command::Summarize { input } => {
            let text = std::fs::read_to_string(&input)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", input.display())))?;
            print!("{}", summarize(&text)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
