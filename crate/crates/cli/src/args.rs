use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use prophet_core::engines::{DEFAULT_SEED, DEFAULT_TRIALS};

/// Threshold stopping rules for the prophet inequality: exact and simulated
/// payoffs, certificates, and threshold sweeps.
#[derive(Debug, Parser)]
#[command(name = "prophet", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// E[M], the named thresholds, the certified interval, and p/R tables.
    Analyze(AnalyzeArgs),
    /// Monte Carlo evaluation of a rule, with the exact value when available.
    Simulate(SimulateArgs),
    /// Runs certificate checks; exits 1 if any fails.
    Certify(CertifyArgs),
    /// Deterministic thresholds on an even grid. The CSV goes to `--out`
    /// (or stdout with `--format csv`); the JSON summary goes to stdout.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Instance file (JSON).
    #[arg(long)]
    pub instance: PathBuf,
    /// Write the output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct Sampling {
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads for Monte Carlo; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Rule file (JSON).
    #[arg(long)]
    pub rule: PathBuf,
    #[command(flatten)]
    pub sampling: Sampling,
    /// Levels z for P(ALG > z), comma separated; defaults to the instance grid.
    #[arg(long, value_delimiter = ',')]
    pub zgrid: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Rule file (JSON); without it the named thresholds and sample_max are checked.
    #[arg(long)]
    pub rule: Option<PathBuf>,
    /// `all` or a comma-separated list of check names.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[command(flatten)]
    pub sampling: Sampling,
    /// Thresholds checked across the certified interval.
    #[arg(long, default_value_t = 21)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Defaults to the lower end of the certified interval.
    #[arg(long)]
    pub tau_min: Option<f64>,
    /// Defaults to the upper end of the certified interval.
    #[arg(long)]
    pub tau_max: Option<f64>,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
}
