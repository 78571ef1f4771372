mod commands;
mod error;
mod experiments;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliResult;

#[derive(Debug, Parser)]
#[command(
    name = "uniexp",
    version,
    about = "Transient distributions of continuous-time Markov chains by uniformization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate nu^T exp(Qt) at one time.
    Expmv(ExpmvArgs),
    /// Evaluate nu^T exp(Qt) at every time in a file.
    Musps(MuspsArgs),
    /// Poisson truncation point and its closed-form bounds.
    Quantile(QuantileArgs),
    /// Write the generator of a built-in model.
    Model(ModelArgs),
    /// Error against the exact immigration-death distribution.
    Validate(experiments::ValidateArgs),
    /// Log-likelihood of the Eyam plague data.
    Eyam(experiments::EyamArgs),
    /// Diffusion discrepancy curves between joined random graphs.
    Diffusion(experiments::DiffusionArgs),
    /// Timing comparisons.
    Bench(experiments::BenchArgs),
}

#[derive(Debug, Args)]
pub struct ExpmvArgs {
    /// Rate matrix in Matrix Market coordinate format.
    #[arg(long)]
    pub matrix: PathBuf,
    /// Initial vector, one value per line.
    #[arg(long)]
    pub nu: PathBuf,
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value_t = 1e-16)]
    pub eps: f64,
    /// Rescale the output to the input mass.
    #[arg(long)]
    pub renorm: bool,
    /// Also skip negligible low-order terms.
    #[arg(long)]
    pub two_tailed: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Append the JSON run report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MuspsArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub nu: PathBuf,
    /// Ascending times, one per line.
    #[arg(long)]
    pub times: PathBuf,
    #[arg(long, default_value_t = 1e-16)]
    pub eps: f64,
    /// Directory for the per-time vectors and `index.csv`.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QuantileArgs {
    #[arg(long)]
    pub rho: f64,
    #[arg(long)]
    pub eps: f64,
    /// Total budget shared by both tails.
    #[arg(long)]
    pub two_tailed: bool,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[command(subcommand)]
    pub kind: commands::ModelCmd,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Expmv(a) => commands::expmv(a),
        Command::Musps(a) => commands::musps(a),
        Command::Quantile(a) => commands::quantile(a),
        Command::Model(a) => commands::model(a.kind),
        Command::Validate(a) => experiments::validate(a),
        Command::Eyam(a) => experiments::eyam(a),
        Command::Diffusion(a) => experiments::diffusion(a),
        Command::Bench(a) => experiments::bench(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.kind.exit_code())
        }
    }
}
