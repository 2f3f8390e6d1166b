//! `nrsync` — command line front end for NR time-synchronization error
//! analysis: timing constants, Monte Carlo TOA/TA simulations, averaging
//! sweeps, error budgets and resync pipeline traces.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

/// Exit codes, fixed so CI can assert on them.
pub mod exit_code {
    pub const USAGE: u8 = 2;
    pub const INVALID: u8 = 3;
    pub const TARGET_MISS: u8 = 4;
    pub const IO: u8 = 5;
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flag value; exit 2 like clap's own usage errors.
    Usage(String),
    /// Structurally valid input that fails scenario/config validation.
    Invalid(String),
    /// Budget exceeded the target and `--fail-on-target-miss` was set.
    TargetMiss(String),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => exit_code::USAGE,
            CliError::Invalid(_) => exit_code::INVALID,
            CliError::TargetMiss(_) => exit_code::TARGET_MISS,
            CliError::Io { .. } => exit_code::IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage: {msg}"),
            CliError::Invalid(msg) => write!(f, "invalid configuration: {msg}"),
            CliError::TargetMiss(msg) => write!(f, "budget target missed: {msg}"),
            CliError::Io { path, source } => {
                write!(f, "i/o failure on {}: {source}", path.display())
            }
        }
    }
}

impl From<nrsync_core::Error> for CliError {
    fn from(e: nrsync_core::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    /// Arithmetic sum of the included components.
    WorstCaseSum,
    /// Root sum of squares.
    RootSumSquare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaeArg {
    /// Tx diversity grade (~65 ns).
    TxDiversity,
    /// Positioning grade (~10 ns).
    Positioning,
}

#[derive(Parser, Debug)]
#[command(
    name = "nrsync",
    version,
    about = "Device-level time synchronization error analysis for 5G NR",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print NR timing constants (t_c, t_mu, slot width) per SCS.
    Constants(ConstantsArgs),
    /// Monte Carlo simulation of the TOA-from-TA error.
    Sim(SimArgs),
    /// Simulations across several TA averaging window sizes.
    Sweep(SweepArgs),
    /// Synchronization error budget against a target.
    Budget(BudgetArgs),
    /// Periodic-resync trace of a drifting device clock.
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug)]
struct ConstantsArgs {
    /// Output format [default: table]
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Write to a file (atomic) instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

/// Scenario flags shared by `sim` and `sweep`. Explicit flags override
/// values from `--config`; documented defaults apply when neither is given.
#[derive(Args, Debug, Clone)]
struct ScenarioFlags {
    /// Subcarrier spacing in kHz: 15, 30, 60 or 120 [default: 15]
    #[arg(long)]
    scs: Option<u32>,
    /// Measurement noise std in slot widths [default: 0.5]
    #[arg(long, conflicts_with = "sigma_ns", allow_negative_numbers = true)]
    sigma_rel: Option<f64>,
    /// Measurement noise std in nanoseconds (instead of --sigma-rel).
    #[arg(long, allow_negative_numbers = true)]
    sigma_ns: Option<f64>,
    /// Number of Monte Carlo trials [default: 1000000]
    #[arg(long)]
    trials: Option<u64>,
    /// RNG seed [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// Confidence for the P_e quantile [default: 0.999]
    #[arg(long)]
    confidence: Option<f64>,
    /// True TOA uniform in slot CENTER_INDEX (1..=3846) [default: 100]
    #[arg(long, value_name = "CENTER_INDEX")]
    toa_slot: Option<u16>,
    /// True TOA fixed at this value in nanoseconds.
    #[arg(long, conflicts_with = "toa_slot", allow_negative_numbers = true)]
    toa_fixed_ns: Option<f64>,
    /// True TOA uniform in [LO, HI) nanoseconds.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"],
          conflicts_with_all = ["toa_slot", "toa_fixed_ns"],
          allow_negative_numbers = true)]
    toa_range_ns: Option<Vec<f64>>,
    /// Constant subtracted from every estimate, nanoseconds [default: 0]
    #[arg(long, allow_negative_numbers = true)]
    bias_correction_ns: Option<f64>,
    /// Scenario JSON file; explicit flags win over its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for the trial fan-out [default: rayon's choice]
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct SimArgs {
    #[command(flatten)]
    scenario: ScenarioFlags,
    /// TA measurements averaged per trial [default: 1]
    #[arg(long)]
    avg: Option<usize>,
    /// Also write the JSON summary to this path.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Output format: csv = error_ns,cdf rows; json = summary [default: csv]
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioFlags,
    /// Averaging window sizes, comma separated [default: 1,2,4,8,16]
    #[arg(long, value_delimiter = ',')]
    avg: Option<Vec<usize>>,
    /// Output format: csv = one CDF column group per window [default: csv]
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BudgetArgs {
    /// Subcarrier spacing in kHz [default: 15]
    #[arg(long)]
    scs: Option<u32>,
    /// Aggregation policy [default: worst-case-sum]
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    /// Time alignment error variant [default: tx-diversity]
    #[arg(long, value_enum)]
    tae: Option<TaeArg>,
    /// Count UE UL transmit timing as its own component (double-counts
    /// against DL frame timing).
    #[arg(long)]
    include_ul_tx_error: bool,
    /// Budget target in nanoseconds [default: 1000]
    #[arg(long, allow_negative_numbers = true)]
    target_ns: Option<f64>,
    /// Replace the TA granularity row with the P_e from a `sim` summary.
    #[arg(long, value_name = "SUMMARY_JSON")]
    from_sim: Option<PathBuf>,
    /// Exit with a distinct code when the total exceeds the target.
    #[arg(long)]
    fail_on_target_miss: bool,
    /// Output format [default: table]
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// Subcarrier spacing in kHz [default: 15]
    #[arg(long)]
    scs: Option<u32>,
    /// Clock frequency error in ppm [default: 10]
    #[arg(long, allow_negative_numbers = true)]
    drift_ppm: Option<f64>,
    /// Resync period in milliseconds [default: 10]
    #[arg(long, allow_negative_numbers = true)]
    resync_ms: Option<f64>,
    /// Number of resync epochs [default: 1000]
    #[arg(long)]
    epochs: Option<usize>,
    /// Measurement noise std in slot widths [default: 0.5]
    #[arg(long, conflicts_with = "sigma_ns", allow_negative_numbers = true)]
    sigma_rel: Option<f64>,
    /// Measurement noise std in nanoseconds.
    #[arg(long, allow_negative_numbers = true)]
    sigma_ns: Option<f64>,
    /// RNG seed [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// Timestamp granularity in nanoseconds [default: 250]
    #[arg(long, allow_negative_numbers = true)]
    granularity_ns: Option<f64>,
    /// True TOA uniform in slot CENTER_INDEX [default: 100]
    #[arg(long, value_name = "CENTER_INDEX")]
    toa_slot: Option<u16>,
    /// Pipeline JSON file; explicit flags win over its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output format: csv = epoch,pre_offset_ns,post_offset_ns [default: csv]
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Constants(args) => commands::constants(args),
        Command::Sim(args) => commands::sim(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::Budget(args) => commands::budget(args),
        Command::Pipeline(args) => commands::pipeline(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nrsync: {e}");
            ExitCode::from(e.code())
        }
    }
}
