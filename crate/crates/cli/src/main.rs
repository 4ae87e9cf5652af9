use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod setup;

#[derive(Parser, Debug)]
#[command(name = "pathrep", version, about = "Gaussian path simulation, pathwise replication and Monte Carlo checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Sample paths and write them as CSV.
    Simulate,
    /// Check the four covariance conditions on a grid.
    CheckClass,
    /// Check the lag-variance conditions behind the small-ball bound.
    CheckSmallballConditions,
    /// Fractional-calculus self-tests against closed forms.
    FracOracle,
    /// Itô formula residuals of forward sums over many paths.
    ItoCheck,
    /// Replicate a law by stopping a diverging integral.
    ReplicateDist,
    /// Improper replication of a functional of the path.
    ReplicateRv,
    /// Proper replication of a Hölder endpoint.
    ReplicateHolder,
    /// Small-ball probabilities and their decay shape.
    VerifySmallball,
    /// Sign-crossing probabilities against the crossing bound.
    VerifyCrossing,
    /// Two integrands with the same integral.
    DemoZeroIntegral,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::CheckClass => "check-class",
            Command::CheckSmallballConditions => "check-smallball-conditions",
            Command::FracOracle => "frac-oracle",
            Command::ItoCheck => "ito-check",
            Command::ReplicateDist => "replicate-dist",
            Command::ReplicateRv => "replicate-rv",
            Command::ReplicateHolder => "replicate-holder",
            Command::VerifySmallball => "verify-smallball",
            Command::VerifyCrossing => "verify-crossing",
            Command::DemoZeroIntegral => "demo-zero-integral",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Fbm,
    StationaryExp,
}

/// Flags override the config file, which overrides the built-in defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct Flags {
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Number of grid cells.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long, global = true)]
    pub hurst: Option<f64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    /// Hölder order of the replicated endpoint.
    #[arg(long, global = true)]
    pub a: Option<f64>,
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Start time of distribution replication.
    #[arg(long, global = true)]
    pub v: Option<f64>,
    #[arg(long, global = true)]
    pub strike: Option<f64>,
    #[arg(long, global = true)]
    pub level: Option<f64>,
    #[arg(long, global = true)]
    pub n_max: Option<usize>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub s: Option<f64>,
    #[arg(long, global = true)]
    pub t: Option<f64>,
    #[arg(long, global = true)]
    pub u: Option<f64>,
    /// Replication tolerance.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match setup::Run::prepare(cli.command, &cli.flags).and_then(|run| commands::dispatch(cli.command, &run)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}: declared tolerance not met, see summary.toml", cli.command.name());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(setup::exit_code(&e))
        }
    }
}
