//! `tbl`: reproducible experiments on graph metrics, doubling constants,
//! empirical transport rates and GCN generalization bounds.

mod commands;
mod error;
mod io;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "tbl", version, about = "Transductive generalization bounds for graph learners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Output {
    /// Report path; the report goes to stdout when omitted.
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Diameter, degrees and connectivity of an edge-list graph.
    Metric {
        graph: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Exact doubling constant with degree and spectral bounds.
    Doubling {
        graph: PathBuf,
        #[arg(long, default_value_t = tbl_core::doubling::DEFAULT_EXACT_LIMIT)]
        exact_limit: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Empirical W_{1/2} rates of a uniform measure against the mean and deviation bounds (CSV).
    Concentration(commands::ConcentrationArgs),
    /// Generalization bound for a GCN class.
    Bound(commands::BoundArgs),
    /// Monte Carlo coverage or Erdős–Rényi event study driven by a JSON config.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Frequencies of diam ≤ 2 and of the degree window on Erdős–Rényi samples.
    ErStudy(commands::ErStudyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    T31,
    C31,
    T32,
    C32,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("TBL_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("TBL_THREADS={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Numeric(format!("cannot size thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Metric { graph, out } => commands::metric(&graph, &out),
        Command::Doubling { graph, exact_limit, out } => commands::doubling(&graph, exact_limit, &out),
        Command::Concentration(args) => commands::concentration(&args),
        Command::Bound(args) => commands::bound(&args),
        Command::Validate { config, out } => validate::validate(&config, &out),
        Command::ErStudy(args) => commands::er_study(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tbl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
