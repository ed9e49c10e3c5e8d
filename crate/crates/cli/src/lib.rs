//! Command-line front end for `vaxinfer`.

pub mod commands;
pub mod report;
pub mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use report::Engine;

pub const TOOL_VERSION: &str = concat!("vaxinfer ", env!("CARGO_PKG_VERSION"));

/// Exit code for malformed arguments, unknown datasets and invalid input.
pub const EXIT_USAGE: i32 = 2;
/// Exit code for a numeric failure inside an engine.
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl From<vaxinfer_core::Error> for CliError {
    fn from(e: vaxinfer_core::Error) -> Self {
        match e {
            vaxinfer_core::Error::Diagnostics(_) => CliError::Numeric(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o error: {e}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "vaxinfer", version, about = "Bayesian inference of vaccine efficacy from trial counts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Format of dataset files read and of summary files written.
    /// Dataset files default to their extension; summaries default to json.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Directory for output files.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Built-in dataset (slug or label) or path to a JSON/CSV dataset file.
    #[arg(long)]
    pub data: String,
    /// Record to pick from a multi-record file.
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Posterior of the efficacy from one trial.
    Infer(InferArgs),
    /// Infections expected among a newly vaccinated cohort.
    Predict(PredictArgs),
    /// Severe-disease probabilities per arm.
    Severity(SeverityArgs),
    /// Combine a flat-prior Beta fit with an informative Beta prior.
    Reshape(ReshapeArgs),
    /// Probability of success on the next trial, (x + 1) / (n + 2).
    Succession(SuccessionArgs),
    /// Simulated posterior sd for a baseline and a reduced-placebo design.
    DesignStudy(DesignArgs),
    /// Print the built-in datasets.
    ListData(ListArgs),
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "both")]
    pub engine: Engine,
    #[arg(long, env = "VAXINFER_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Grid points for the exact engine.
    #[arg(long, default_value_t = vaxinfer_core::exact::DEFAULT_GRID_SIZE)]
    pub grid: usize,
    /// Iterations per chain, burn-in included.
    #[arg(long, default_value_t = 50_000)]
    pub iter: usize,
    #[arg(long, default_value_t = 5_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    /// Threshold for the reported tail probability P(eps >= tail).
    #[arg(long, default_value_t = 0.9)]
    pub tail: f64,
    /// Also write density.csv and density.svg.
    #[arg(long)]
    pub density: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Size of the new vaccinated cohort.
    #[arg(long)]
    pub n: u64,
    /// Expected assault probability.
    #[arg(long)]
    pub pa: f64,
    /// Uncertainty of the assault probability.
    #[arg(long, default_value_t = 0.0)]
    pub pa_sd: f64,
    /// Efficacy (mean, or the exact value with --exact-eps).
    #[arg(long, visible_alias = "eps-mean", conflicts_with = "from_report")]
    pub eps: Option<f64>,
    #[arg(long, conflicts_with_all = ["exact_eps", "from_report"])]
    pub eps_sd: Option<f64>,
    /// Treat --eps as known exactly.
    #[arg(long, requires = "eps")]
    pub exact_eps: bool,
    /// Take the efficacy from the Beta fit of a report.json.
    #[arg(long)]
    pub from_report: Option<PathBuf>,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, env = "VAXINFER_SEED", default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SeverityArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ReshapeArgs {
    #[arg(long)]
    pub flat_r: f64,
    #[arg(long)]
    pub flat_s: f64,
    #[arg(long, default_value_t = 1.0)]
    pub prior_r: f64,
    #[arg(long, default_value_t = 1.0)]
    pub prior_s: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SuccessionArgs {
    pub successes: u64,
    pub trials: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Dataset giving the baseline arm sizes and the placebo infection rate.
    #[arg(long, default_value = "pfizer")]
    pub data: String,
    #[arg(long)]
    pub label: Option<String>,
    /// True efficacy used to simulate the trials.
    #[arg(long, default_value_t = 0.95)]
    pub eps: f64,
    /// True assault probability; defaults to nPI / nP of the dataset.
    #[arg(long)]
    pub pa: Option<f64>,
    /// Fraction of the placebo arm moved to the vaccine arm.
    #[arg(long, default_value_t = 2.0 / 3.0)]
    pub shift: f64,
    #[arg(long, default_value_t = 400)]
    pub replications: usize,
    #[arg(long, default_value_t = 501)]
    pub grid: usize,
    #[arg(long, env = "VAXINFER_SEED", default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ListArgs {
    #[command(flatten)]
    pub common: Common,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { write!(out, "{rendered}") } else { write!(err, "{rendered}") };
            return code;
        }
    };
    match commands::dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
