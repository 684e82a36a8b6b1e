//! `fuzzyqm` command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 for usage or configuration
//! errors, 2 when a check misses its tolerance.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use report::Outcome;

#[derive(Debug, Parser)]
#[command(name = "fuzzyqm", version, about = "Verify classical readings of quantum measurement")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Hilbert space dimension, 2 to 16.
    #[arg(long, global = true, default_value_t = 2)]
    pub dim: usize,
    /// RNG seed.
    #[arg(long, global = true, env = "FUZZYQM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Number of random instances.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Sample count (scan size, test points or Monte Carlo draws).
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Overrides the command's tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Omit the timestamp so repeated runs are byte-identical.
    #[arg(long, global = true)]
    pub deterministic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Frame probabilities to state and back.
    Reconstruct {
        /// Use the qubit SIC frame instead of a random IC frame.
        #[arg(long)]
        sic: bool,
    },
    /// Scan Haar states for negative frame coefficients.
    Negativity {
        /// Also report `antipodal:K`, `aligned:K` or `mixed`.
        #[arg(long)]
        state: Option<String>,
    },
    /// Check the measurement update identities on random instances.
    UpdateVerify {
        #[arg(long, default_value_t = 4)]
        outcomes: usize,
        #[arg(long, value_enum, default_value_t = commands::KrausKind::Luders)]
        kraus: commands::KrausKind,
        /// Atoms in the random prior decomposition (default dim + 2).
        #[arg(long)]
        atoms: Option<usize>,
    },
    /// CHSH value in the quantum and classical extension pictures.
    Bell {
        /// Angles in degrees: A0,A1,B0,B1.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        angles: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = commands::BellState::Singlet)]
        state: commands::BellState,
        /// Scenario JSON file; overrides --angles and --state.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Exact smearing check plus a uniform POVM Monte Carlo sample.
    Smearing,
}

fn run(cli: Cli) -> Outcome {
    let common = cli.common;
    let report = match cli.command {
        Command::Reconstruct { sic } => commands::reconstruct(&common, sic),
        Command::Negativity { state } => commands::negativity(&common, state.as_deref()),
        Command::UpdateVerify { outcomes, kraus, atoms } => commands::update_verify(&common, outcomes, kraus, atoms),
        Command::Bell { angles, state, scenario } => commands::bell(&common, angles, state, scenario),
        Command::Smearing => commands::smearing(&common),
    };
    match report {
        Ok(r) => report::emit(&common, &r),
        Err(e) => Outcome::from_error(e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    run(cli).exit_code()
}
