//! Command-line surface. Solver and synthesis flags are `Option`-typed so a
//! `--config` file can fill anything the command line leaves unset (flags
//! win on conflict).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "ntd",
    version,
    about = "Nonnegative Tucker decomposition experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decompose a tensor file and write the fitted model plus a trace.
    Decompose(DecomposeArgs),
    /// Generate a synthetic ground-truth model and its observations.
    Synth(SynthArgs),
    /// Recovery quality across factor/core sparsity levels.
    SparsitySweep(SparsitySweepArgs),
    /// Fits and timings across noise levels, with and without LRA.
    NoiseSweep(NoiseSweepArgs),
    /// Complete a partially observed tensor, then decompose it.
    Complete(CompleteArgs),
    /// Print the gradient multiply counts with and without LRA.
    Flops(FlopsArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Solver options; every field may also come from the config file.
#[derive(Args, Debug, Clone, Default)]
pub struct SolverFlags {
    /// Per-mode NTD ranks, e.g. 3,3,3
    #[arg(long, value_delimiter = ',')]
    pub ranks: Option<Vec<usize>>,
    /// Compression ranks (default: the NTD ranks)
    #[arg(long, value_delimiter = ',')]
    pub lra_ranks: Option<Vec<usize>>,
    /// mu | hals | apg | als
    #[arg(long)]
    pub algorithm: Option<String>,
    /// Compress with truncated HOSVD before solving
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub use_lra: Option<bool>,
    #[arg(long)]
    pub inner_iters: Option<usize>,
    #[arg(long)]
    pub outer_iters: Option<usize>,
    /// Stop when the largest squared block change falls below this
    #[arg(long)]
    pub tol: Option<f64>,
    /// l1 weight on the core
    #[arg(long)]
    pub l1_core: Option<f64>,
    /// Per-mode Frobenius weights on the factors, e.g. 0.1,0,0
    #[arg(long, value_delimiter = ',')]
    pub fro_factor: Option<Vec<f64>>,
    /// 0-based modes left unconstrained (semi-NTD)
    #[arg(long, value_delimiter = ',')]
    pub semi_modes: Option<Vec<usize>>,
    /// Leave the core unconstrained
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub semi_core: Option<bool>,
    /// Fix the last mode's factor to the identity
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub population: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Project only the HALS increment instead of the whole column
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub hals_project_increment: Option<bool>,
    /// Clip negative entries to zero before a direct (non-LRA) solve
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub clip_negatives: Option<bool>,
}

/// Synthetic-data options; may also come from the config file.
#[derive(Args, Debug, Clone, Default)]
pub struct SynthFlags {
    /// Tensor extents, e.g. 30,30,30
    #[arg(long, value_delimiter = ',')]
    pub extents: Option<Vec<usize>>,
    /// Fraction of exact zeros in every factor
    #[arg(long)]
    pub factor_sparsity: Option<f64>,
    /// Fraction of exact zeros in the core
    #[arg(long)]
    pub core_sparsity: Option<f64>,
    /// Mean of the exponential entry distribution
    #[arg(long)]
    pub mean: Option<f64>,
    /// Number of Monte Carlo trials per sweep point
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct OutputFlags {
    /// Directory for emitted files (created if missing)
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: ReportFormat,
    /// Write real wall-clock timings into report files (breaks
    /// byte-reproducibility); timings always print to stdout
    #[arg(long)]
    pub benchmark: bool,
    /// TOML config file; command-line flags override its keys
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    /// Tensor file (binary NTN1 or plain text)
    #[arg(long)]
    pub input: PathBuf,
    /// Reuse/write the compression model at this path
    #[arg(long)]
    pub lra_cache: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[command(flatten)]
    pub synth: SynthFlags,
    /// Per-mode ground-truth ranks
    #[arg(long, value_delimiter = ',')]
    pub ranks: Option<Vec<usize>>,
    /// Noise level in dB, or "clean"
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(Args, Debug)]
pub struct SparsitySweepArgs {
    /// Sparsity grid applied to both factors and core, e.g. 0,0.1,0.2
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sparsity: Vec<f64>,
    /// Noise level in dB, or "clean"
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<String>,
    /// Comma list of algorithms to run
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Option<Vec<String>>,
    #[command(flatten)]
    pub synth: SynthFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(Args, Debug)]
pub struct NoiseSweepArgs {
    /// Noise grid in dB ("clean" allowed), e.g. -5,0,5,10
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr_db: Vec<String>,
    /// Comma list of algorithms; each runs with and without LRA
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Option<Vec<String>>,
    #[command(flatten)]
    pub synth: SynthFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(Args, Debug)]
pub struct CompleteArgs {
    /// Tensor file with the (partial) observations
    #[arg(long)]
    pub input: PathBuf,
    /// Weight tensor file, entries in [0,1]; 0 marks missing
    #[arg(long)]
    pub mask: PathBuf,
    /// Ground-truth tensor file for hidden-entry error reporting
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub completion_iters: Option<usize>,
    #[arg(long)]
    pub completion_tol: Option<f64>,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(Args, Debug)]
pub struct FlopsArgs {
    /// Tensor order N
    #[arg(long)]
    pub order: u32,
    /// Common mode extent I
    #[arg(long)]
    pub extent: u64,
    /// Common rank R
    #[arg(long)]
    pub rank: u64,
    /// Optional extent sweep, e.g. 20,40,80
    #[arg(long, value_delimiter = ',')]
    pub extent_sweep: Option<Vec<u64>>,
    /// Write flops.csv into this directory
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}
