//! `fgp`: functionally generated portfolio analysis from the command line.
//!
//! Subcommands: weights, decompose, simulate, optimize, check, backtest.
//! Exit codes: 0 success, 2 parse/input error, 3 infeasibility, 4 numeric
//! failure, 1 anything else.

mod commands;
mod config;
mod portfolio;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Application error carrying its exit code.
#[derive(Debug)]
pub struct AppError {
    pub code: u8,
    pub message: String,
}

impl AppError {
    pub fn parse(message: String) -> Self {
        Self { code: 2, message }
    }
    pub fn infeasible(message: String) -> Self {
        Self { code: 3, message }
    }
    pub fn numeric(message: String) -> Self {
        Self { code: 4, message }
    }
    pub fn other(message: String) -> Self {
        Self { code: 1, message }
    }
}

impl From<fgp_core::Error> for AppError {
    fn from(e: fgp_core::Error) -> Self {
        use fgp_core::Error as E;
        let code = match &e {
            E::CsvFormat { .. }
            | E::InvalidSimplexPoint(_)
            | E::InvalidTangentVector { .. }
            | E::NonpositiveCapitalization { .. }
            | E::NonpositiveReturn { .. }
            | E::MixedDimensions { .. }
            | E::EmptyPath
            | E::EmptyHistory
            | E::EmptySample
            | E::NoJumps
            | E::DimensionMismatch(_)
            | E::BadDiversityParameter(_)
            | E::InvalidSchedule(_)
            | E::OffGridSample { .. }
            | E::GridTooSmall { .. }
            | E::TooFewQuadratureSteps(_)
            | E::InvalidRegion(_) => 2,
            E::Infeasible(_) | E::StartOutsideRegion => 3,
            E::PortfolioRuin { .. }
            | E::NonpositiveGrowth { .. }
            | E::NegativeDivergence { .. }
            | E::NonpositiveGenerator { .. }
            | E::GeneratorNotConcave { .. }
            | E::StepUnderflow { .. }
            | E::NonpositiveOnGrid { .. }
            | E::WeightOutOfRange { .. }
            | E::ObjectiveUndefined { .. }
            | E::CycleNotClosed { .. }
            | E::InvalidPortfolioWeights(_)
            | E::SamplerLeftSimplex { .. } => 4,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckMode {
    Rmcm,
    Divergence,
    Integral,
    Aggressiveness,
}

#[derive(Parser)]
#[command(
    name = "fgp",
    version,
    about = "Functionally generated portfolio analysis: relative value, decomposition, dominance diagnostics, bootstrap intensity measures and shape-constrained optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a price/capitalization CSV into a market weight CSV.
    Weights {
        #[arg(long)]
        prices: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fernholz decomposition of a portfolio along a weight path.
    Decompose {
        /// Market weight CSV (output of `weights`).
        #[arg(long)]
        weights: PathBuf,
        /// market | equal | entropy | diversity:<r> | path of a solution JSON.
        #[arg(long)]
        portfolio: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bootstrap market-weight paths killed at the exit of K; emit jump pairs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Training price CSV (returns are recentered to zero mean).
        #[arg(long)]
        prices: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Override [bootstrap].paths.
        #[arg(long)]
        paths: Option<usize>,
        /// Override [bootstrap].max_len.
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Solve the shape-constrained problem on a jump sample.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        /// Jump sample CSV (output of `simulate`).
        #[arg(long)]
        sample: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dominance and maximality diagnostics.
    Check {
        #[arg(long, value_enum)]
        mode: CheckMode,
        /// First portfolio (the candidate dominator for rmcm/divergence).
        #[arg(long)]
        a: String,
        /// Second portfolio (required for rmcm and divergence).
        #[arg(long)]
        b: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cycles or jump pairs to sample.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Optional JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decompose a solved portfolio over held-out prices.
    Backtest {
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        prices: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON summary path.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

fn run() -> Result<(), AppError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Weights { prices, out } => commands::cmd_weights(&prices, &out),
        Command::Decompose {
            weights,
            portfolio,
            out,
        } => commands::cmd_decompose(&weights, &portfolio, &out),
        Command::Simulate {
            config,
            prices,
            seed,
            out,
            paths,
            max_len,
        } => commands::cmd_simulate(&config, &prices, seed, &out, paths, max_len),
        Command::Optimize {
            config,
            sample,
            seed,
            out,
        } => commands::cmd_optimize(&config, &sample, seed, &out),
        Command::Check {
            mode,
            a,
            b,
            seed,
            samples,
            out,
        } => commands::cmd_check(mode, &a, b.as_deref(), seed, samples, out.as_deref()),
        Command::Backtest {
            solution,
            prices,
            out,
            summary,
        } => commands::cmd_backtest(&solution, &prices, &out, summary.as_deref()),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
