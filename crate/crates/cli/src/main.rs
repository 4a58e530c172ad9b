//! `pdos`: batch jobs over the pdos library emitting CSV or JSON tables plus a run manifest.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use output::Format;

#[derive(Debug, Parser)]
#[command(name = "pdos", version, about = "Optimal stopping with a sample of the values: classic rules, limit bounds, simulation and finite LPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Optimal threshold schedule and value of a classic problem.
    Classic(ClassicArgs),
    /// Lower and upper bounds on the limit competitive ratio for a list of sample rates.
    Bounds(BoundsArgs),
    /// Monte Carlo estimate of a threshold schedule's reward and competitive ratio.
    Simulate(SimulateArgs),
    /// Solve a finite LP (known values or the adversarial dominance program).
    Lp(LpArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OutputArgs {
    /// Output file; stdout when omitted (the manifest then goes to stderr).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ClassicArgs {
    /// secretary, one-two, min-rank or constant.
    #[arg(long, default_value = "secretary")]
    pub problem: String,
    /// Sample rate; closed forms are used at 0, coordinate ascent otherwise.
    #[arg(long, default_value_t = 0.0)]
    pub p: f64,
    /// Number of optimized thresholds for p > 0 (default: enough for the value to converge;
    /// 500 for min-rank).
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Value of every item for the constant problem.
    #[arg(long, default_value_t = 1.0)]
    pub value: f64,
    /// Seed of the random restarts of coordinate ascent.
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BoundsArgs {
    /// Comma-separated sample rates; each must make p N an integer.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub p: Vec<f64>,
    /// Grid size of the upper-bound LP.
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    /// Ranks kept by the upper-bound LP (default ceil(ln(N/(1-p)))).
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Ranks kept by the lower-bound program (default max(2, ceil(ln 0.001 / ln p))).
    #[arg(long)]
    pub lbp_kmax: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Independent,
    Dependent,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Instance JSON `{"values": [...], "default_tail": y}`; without it every 0/1 step
    /// instance with k = 1..kmax ones on N items is scored.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Schedule JSON `{"p": p, "times": [...], "tail_is_one": true}`.
    #[arg(long)]
    pub schedule: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelKind::Independent)]
    pub model: ModelKind,
    /// Sample rate (default: the schedule's).
    #[arg(long)]
    pub p: Option<f64>,
    /// Number of items for the step-instance sweep.
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Largest step instance in the sweep (default ceil(ln 0.001 / ln p)).
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpMode {
    Known,
    Sdlp,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LpArgs {
    #[arg(long, value_enum)]
    pub mode: LpMode,
    #[arg(long)]
    pub n: usize,
    /// History size.
    #[arg(long)]
    pub h: usize,
    /// Instance JSON for the known-values LP (default: the secretary payoff on N items).
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Output file for the solution JSON; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write to this file instead of the recorded output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
