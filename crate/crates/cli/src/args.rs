use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::output::Format;

/// Noisy noon-state simulation: state preparation, phase sensitivity,
/// bootstrapping schedules and estimation.
#[derive(Debug, Parser)]
#[command(name = "noon", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Output format [default: csv, json for `estimate`]
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output here instead of stdout
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// RNG seed [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Significant digits for CSV floats [default: 17]
    #[arg(long, global = true)]
    pub digits: Option<usize>,
    /// TOML file with defaults; command-line flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (does not change results)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Read angle arguments as multiples of π
    #[arg(long, global = true)]
    pub in_units_of_pi: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Noise-averaged state and its noon fidelity and visibility
    Prepare(PrepareArgs),
    /// Phase sensitivity against photon number
    Curve(CurveArgs),
    /// Bootstrapping schedule
    Bootstrap(BootstrapArgs),
    /// Simulated estimation experiment against the Cramér–Rao bound
    Estimate(EstimateArgs),
    /// Fisher information over a phase grid: closed forms and numeric
    Fisher(FisherArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Prepare(_) => "prepare",
            Command::Curve(_) => "curve",
            Command::Bootstrap(_) => "bootstrap",
            Command::Estimate(_) => "estimate",
            Command::Fisher(_) => "fisher",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PrepMethod {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// μₖ = 2πk/N + π(N−1)/N: noiseless product is exactly the noon state
    Noon,
    /// μₖ = 2πk/N
    RootsOfUnity,
    /// μₖ = 2π(k−1)/N
    RootsOfUnityZeroBased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixNorm {
    /// 1/(2N!) normalization; trace exceeds 1 under noise
    PaperNorm,
    TraceOne,
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Photon number N
    #[arg(long)]
    pub n: Option<usize>,
    /// Phase-noise variance δ (rad²)
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_enum)]
    pub method: Option<PrepMethod>,
    /// Monte Carlo samples [default: 100000]
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_enum)]
    pub convention: Option<Convention>,
    /// Largest N for the exact average [default: 20]
    #[arg(long)]
    pub cap: Option<usize>,
    /// Emit the full density matrix (long form) instead of the summary row
    #[arg(long)]
    pub matrix: bool,
    /// Normalization of the emitted matrix [default: paper-norm]
    #[arg(long, value_enum)]
    pub normalization: Option<MatrixNorm>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub delta: Option<f64>,
    /// [default: 1]
    #[arg(long)]
    pub n_min: Option<u64>,
    /// [default: 400]
    #[arg(long)]
    pub n_max: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BootstrapMethod {
    Exact,
    ClosedForm,
    /// Exact recursion, printed closed form and quoted values side by side
    Compare,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    /// Initial phase-noise variance δ₀
    #[arg(long, conflicts_with = "sqrt_delta0")]
    pub delta0: Option<f64>,
    /// Initial phase-noise standard deviation √δ₀
    #[arg(long)]
    pub sqrt_delta0: Option<f64>,
    /// [default: 3]
    #[arg(long)]
    pub steps: Option<u32>,
    /// [default: compare]
    #[arg(long, value_enum)]
    pub method: Option<BootstrapMethod>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// True phase
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    /// Shots per trial [default: 10000]
    #[arg(long)]
    pub shots: Option<u64>,
    /// [default: 500]
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FisherSource {
    /// Closed-form outcome probabilities
    Analytic,
    /// Probabilities measured on the exact noise-averaged state
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Renormalize within span{|N,0⟩, |0,N⟩}
    Condition,
    /// Keep the remaining population as a third outcome
    Aggregate,
}

#[derive(Debug, Args)]
pub struct FisherArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    pub phi_min: Option<f64>,
    /// [default: π/N]
    #[arg(long, allow_hyphen_values = true)]
    pub phi_max: Option<f64>,
    /// [default: 33]
    #[arg(long)]
    pub phi_points: Option<usize>,
    /// Probabilities behind the numeric column [default: analytic]
    #[arg(long, value_enum)]
    pub source: Option<FisherSource>,
    /// [default: condition]
    #[arg(long, value_enum)]
    pub policy: Option<Policy>,
    /// Initial finite-difference step [default: 1e-4]
    #[arg(long)]
    pub step: Option<f64>,
    /// Largest N for the exact source [default: 20]
    #[arg(long)]
    pub cap: Option<usize>,
}
