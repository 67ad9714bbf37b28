//! `gini-mds`: batch frontend for the gini-mds library.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gini_mds::ErrorClass;

#[derive(Parser, Debug)]
#[command(name = "gini-mds", version, about = "Robust multidimensional scaling with Gini distances")]
struct Cli {
    /// Worker threads for distance and tuning kernels. Results do not depend on it.
    #[arg(long, global = true, env = "GINI_MDS_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Embed a dataset with a fixed metric.
    Embed(commands::EmbedArgs),
    /// Choose ν by cross-validated Kruskal stress and embed at the winner.
    Tune(commands::TuneArgs),
    /// Score an embedding against its source data.
    Eval(commands::EvalArgs),
    /// Run the heavy-tailed simulation protocol.
    Simulate(commands::SimulateArgs),
    /// Inflate a seeded subset of rows.
    Contaminate(commands::ContaminateArgs),
}

/// Options shared by commands that read a data CSV.
#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Input CSV, one row per observation.
    pub input: PathBuf,

    /// Column holding class labels, by header name or zero-based index.
    #[arg(long)]
    pub labels: Option<String>,

    /// Treat the first row as a header. Detected automatically when omitted.
    #[arg(long, overrides_with = "no_header")]
    pub header: bool,

    #[arg(long, overrides_with = "header")]
    pub no_header: bool,

    /// Per-feature standardization applied after loading.
    #[arg(long, value_enum, default_value_t = Standardize::None)]
    pub standardize: Standardize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Standardize {
    None,
    /// Zero mean, unit variance.
    Mean,
    /// Zero median, unit variance.
    Median,
}

/// Failure with an exit-code class attached.
#[derive(Debug)]
pub struct CliError {
    class: ErrorClass,
    message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Config,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Data,
            message: message.into(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self.class {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Numeric => 4,
        }
    }
}

impl From<gini_mds::Error> for CliError {
    fn from(e: gini_mds::Error) -> Self {
        Self {
            class: e.class(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::config(format!("cannot start thread pool: {e}")))?;
    }
    match cli.command {
        Command::Embed(args) => commands::embed(&args),
        Command::Tune(args) => commands::tune(&args),
        Command::Eval(args) => commands::eval(&args),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Contaminate(args) => commands::contaminate(&args),
    }
}
