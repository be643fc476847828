mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "szego-lab", version, about = "Truncated cubic Szego flow experiments")]
pub struct Cli {
    /// Worker threads (falls back to SZEGO_LAB_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output directory for CSV files and manifests.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// TOML file with `out`, `threads`, `verbosity` and a `[params]` table.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print one sample of the truncated Gaussian measure.
    Sample(SampleArgs),
    /// Evolve a datum and compare with the exact solution where one exists.
    Evolve(EvolveArgs),
    /// Evaluate a scalar observable on one Gaussian sample.
    Observable(ObservableArgs),
    /// Evaluate the constant I_s by three independent routes.
    Quadrature(QuadratureArgs),
    /// Run a named experiment and write its CSV and manifest.
    Experiment(ExperimentArgs),
    /// List the experiments with a one-line summary.
    ListExperiments,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub cutoff: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvolveMode {
    Single,
    Constant,
    Random,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[arg(long, value_enum)]
    pub mode: EvolveMode,
    /// Frequency of the single mode.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Real amplitude of the single mode or constant.
    #[arg(long, default_value_t = 1.0)]
    pub amp: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long)]
    pub cutoff: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub rtol: f64,
    /// Fixed-step RK4 instead of Dormand-Prince.
    #[arg(long)]
    pub rk4: bool,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Regularity of the random datum.
    #[arg(long, default_value_t = 0.8)]
    pub s: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Record the trajectory at this spacing into `evolve.csv`.
    #[arg(long)]
    pub record_every: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObservableKind {
    Fn,
    Gn,
    QPi,
    QN,
    HN,
    Density,
}

#[derive(Debug, Args)]
pub struct ObservableArgs {
    #[arg(value_enum)]
    pub kind: ObservableKind,
    #[arg(long)]
    pub s: f64,
    /// Dyadic block N, or the truncation for `q-pi` and `density`.
    #[arg(long)]
    pub n: u64,
    /// Galerkin cutoff K of the sample (defaults to 8N).
    #[arg(long)]
    pub cutoff: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
}

#[derive(Debug, Args)]
pub struct QuadratureArgs {
    #[arg(long)]
    pub s: f64,
    /// Largest allowed relative spread between the routes.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    pub name: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub s: Option<f64>,
    /// Comma-separated dyadic cutoffs.
    #[arg(long, value_delimiter = ',')]
    pub cutoffs: Option<Vec<u64>>,
    /// Comma-separated times.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long)]
    pub galerkin_factor: Option<usize>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Disable the enlarged rerun after a failed statistical check.
    #[arg(long)]
    pub no_rerun: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match commands::dispatch(cli) {
        Ok(commands::Outcome::Passed) => ExitCode::SUCCESS,
        Ok(commands::Outcome::CheckFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
