//! Flag definitions. Every value is optional here so that a config file
//! can fill gaps; defaults are applied in [`crate::config`].

use std::path::PathBuf;

use bitpact::Mode;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bitpact", version, about = "Two-party bit-string agreement: simulation, analysis and MPC demo")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one session and write its per-step trace as CSV.
    Simulate(SimulateOpts),
    /// Monte Carlo mean density against the ODE on the grid t = i/n.
    Compare(CompareOpts),
    /// Integrate the density ODE and write `t,x` samples.
    Ode(OdeOpts),
    /// Hitting-time bound table with an ordering self-check.
    Bounds(BoundsOpts),
    /// Evaluate one comparison circuit securely and report the transcript.
    MpcDemo(DemoOpts),
    /// Run the built-in consistency checks.
    Selfcheck(SelfcheckOpts),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonOpts {
    /// key=value file; flags take precedence over it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Shared seed, decimal or 0x hex [default: $BITPACT_SEED, else 0]
    #[arg(long)]
    pub seed: Option<String>,
    /// Write output here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SessionOpts {
    /// String length [default: 1000, or the length of --init-a]
    #[arg(long)]
    pub n: Option<usize>,
    /// Sample size per step [default: 5]
    #[arg(long)]
    pub k: Option<usize>,
    /// Positions flipped per flip [default: 2]
    #[arg(long)]
    pub l: Option<usize>,
    /// Initial agreement density; excludes --init-a/--init-b
    #[arg(long)]
    pub x0: Option<f64>,
    /// Party A's initial string of 0/1 characters
    #[arg(long)]
    pub init_a: Option<String>,
    /// Party B's initial string of 0/1 characters
    #[arg(long)]
    pub init_b: Option<String>,
    /// Number of protocol steps [default: 5n]
    #[arg(long)]
    pub steps: Option<u64>,
    /// Sampled disagreements needed to flip [default: ceil(k/2)]
    #[arg(long)]
    pub threshold: Option<usize>,
    /// How the threshold test is computed [default: oracle]
    #[arg(long)]
    pub mode: Option<Mode>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateOpts {
    #[command(flatten)]
    pub common: CommonOpts,
    #[command(flatten)]
    pub session: SessionOpts,
}

#[derive(Debug, Clone, Args)]
pub struct CompareOpts {
    #[command(flatten)]
    pub common: CommonOpts,
    #[command(flatten)]
    pub session: SessionOpts,
    /// Independent sessions to average [default: 11]
    #[arg(long)]
    pub trials: Option<usize>,
    /// ODE step size [default: 0.001]
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct OdeOpts {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Sample size [default: 5]
    #[arg(long)]
    pub k: Option<usize>,
    /// Flip size [default: 2]
    #[arg(long)]
    pub l: Option<usize>,
    /// Initial density (required)
    #[arg(long)]
    pub x0: Option<f64>,
    /// Step size [default: 0.001]
    #[arg(long)]
    pub dt: Option<f64>,
    /// Integration horizon [default: 5]
    #[arg(long)]
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsOpts {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Sample sizes to sweep [default: 2,3,5]
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    /// Flip sizes to sweep; pairs with l > k are skipped [default: 1,2]
    #[arg(long, value_delimiter = ',')]
    pub ls: Option<Vec<usize>>,
    /// Initial densities to sweep [default: 0.05,0.1,0.2]
    #[arg(long, value_delimiter = ',')]
    pub x0s: Option<Vec<f64>>,
    /// Target densities h*x0; targets below x0 are skipped [default: 0.2,0.4,0.6]
    #[arg(long, value_delimiter = ',', conflicts_with = "hs")]
    pub targets: Option<Vec<f64>>,
    /// Growth factors h, used instead of --targets
    #[arg(long, value_delimiter = ',')]
    pub hs: Option<Vec<f64>>,
    /// ODE step size for the hitting times [default: 0.001]
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoFunction {
    /// Single bit: relation count >= threshold
    Threshold,
    /// Relation count, MSB first
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoBasis {
    Agreement,
    Disagreement,
}

#[derive(Debug, Clone, Args)]
pub struct DemoOpts {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Input width, at most 64 [default: 5, or the length of --init-a]
    #[arg(long)]
    pub k: Option<usize>,
    /// Threshold r [default: ceil(k/2)]
    #[arg(long)]
    pub threshold: Option<usize>,
    /// Party A's input; random from the seed if omitted
    #[arg(long)]
    pub init_a: Option<String>,
    /// Party B's input; random from the seed if omitted
    #[arg(long)]
    pub init_b: Option<String>,
    /// Circuit to evaluate [default: threshold]
    #[arg(long, value_enum)]
    pub function: Option<DemoFunction>,
    /// Positions counted by the circuit [default: agreement]
    #[arg(long, value_enum)]
    pub basis: Option<DemoBasis>,
}

#[derive(Debug, Clone, Args)]
pub struct SelfcheckOpts {
    #[command(flatten)]
    pub common: CommonOpts,
}
