use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "sketchbench", version, about = "Random projection toolkit and bound verifier")]
pub struct Cli {
    /// Master seed; every random quantity is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "SKETCHBENCH_THREADS")]
    pub threads: Option<usize>,

    /// Data output file (projected points, features, predictions).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// JSON report destination; stdout when absent.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub report: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Minimum JL dimension and failure probabilities.
    JlBounds(JlBoundsArgs),
    /// Project a point set and measure pairwise distortion.
    JlVerify(JlVerifyArgs),
    /// Projected-length tail probability against the closed-form bound.
    TailCheck(TailCheckArgs),
    /// Restricted isometry on random sparse vectors.
    RipCheck(RipCheckArgs),
    /// Spread of distances from the origin as dimension grows.
    NormGap(NormGapArgs),
    /// Randomized low-rank approximation with error certificate.
    Lowrank(LowrankArgs),
    /// Approximate nearest neighbour on the hypercube.
    #[command(subcommand)]
    Ann(AnnCommand),
    /// Random Fourier features of a point set.
    Rff(RffArgs),
    /// Concentration, unbiasedness and sup-error checks for random features.
    RffVerify(RffVerifyArgs),
    /// Random kitchen sinks with a ridge readout.
    #[command(subcommand)]
    Rks(RksCommand),
    /// Distance and angle behaviour of random ReLU layers.
    #[command(subcommand)]
    Layers(LayersCommand),
    /// Majority-vote ensembles of randomly projected 1-NN classifiers.
    #[command(subcommand)]
    Ensemble(EnsembleCommand),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::JlBounds(_) => "jl-bounds",
            Command::JlVerify(_) => "jl-verify",
            Command::TailCheck(_) => "tail-check",
            Command::RipCheck(_) => "rip-check",
            Command::NormGap(_) => "norm-gap",
            Command::Lowrank(_) => "lowrank",
            Command::Ann(AnnCommand::Build(_)) => "ann build",
            Command::Ann(AnnCommand::Query(_)) => "ann query",
            Command::Rff(_) => "rff",
            Command::RffVerify(_) => "rff-verify",
            Command::Rks(RksCommand::Train(_)) => "rks train",
            Command::Rks(RksCommand::Predict(_)) => "rks predict",
            Command::Layers(LayersCommand::Verify(_)) => "layers verify",
            Command::Ensemble(EnsembleCommand::Train(_)) => "ensemble train",
            Command::Ensemble(EnsembleCommand::Predict(_)) => "ensemble predict",
        }
    }
}

/// Either a data file or the size of a generated synthetic set.
#[derive(Debug, Args, Serialize)]
pub struct PointsArgs {
    /// CSV or raw (.skbm) matrix, one sample per row.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Generated points when no input is given.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Dimension of generated points.
    #[arg(long, default_value_t = 1000)]
    pub d: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct JlBoundsArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub epsilon: f64,
    /// Evaluate failure probabilities at this p instead of the minimum.
    #[arg(long)]
    pub p: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct JlVerifyArgs {
    #[command(flatten)]
    pub points: PointsArgs,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// Target dimension; defaults to the JL minimum for n and epsilon.
    #[arg(long)]
    pub p: Option<usize>,
    /// gaussian, gaussian-unit, rademacher or sparse.
    #[arg(long, default_value = "gaussian")]
    pub distribution: String,
    /// Use the identity map instead of a random projection.
    #[arg(long)]
    pub identity: bool,
    /// Multiply coordinates by random signs before projecting.
    #[arg(long)]
    pub sign_flip: bool,
    /// Allowed violating fraction as a multiple of n(n-1)·δ.
    #[arg(long, default_value_t = 3.0)]
    pub slack: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct TailCheckArgs {
    #[arg(long, default_value_t = 20)]
    pub p: usize,
    #[arg(long, default_value_t = 400)]
    pub d: usize,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long, default_value_t = 200_000)]
    pub trials: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct RipCheckArgs {
    #[arg(long, default_value_t = 256)]
    pub d: usize,
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// Defaults to ceil(k ln(d/k) / ε²).
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.05)]
    pub max_violations: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct NormGapArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', default_value = "2,10,100,1000")]
    pub d_list: Vec<usize>,
    #[arg(long, default_value_t = 2.0)]
    pub r: f64,
    #[arg(long, default_value_t = 20)]
    pub repeats: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct LowrankArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Rows (features) of the generated matrix.
    #[arg(long, default_value_t = 200)]
    pub rows: usize,
    /// Columns (samples) of the generated matrix.
    #[arg(long, default_value_t = 100)]
    pub cols: usize,
    /// Rank of the generated signal.
    #[arg(long, default_value_t = 5)]
    pub true_rank: usize,
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    /// Sketch size; defaults to ceil(c ln n / ε²), capped at n.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 8.0)]
    pub c: f64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnnCommand {
    Build(AnnBuildArgs),
    Query(AnnQueryArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct AnnBuildArgs {
    /// Real-valued CSV (quantized) or 0/1 CSV with --binary.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub binary: bool,
    /// Quantization levels per coordinate for real input.
    #[arg(long, default_value_t = 15)]
    pub thresholds: usize,
    /// Random points when no input is given.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 256)]
    pub d: usize,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// Independent projections per level.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long)]
    pub index: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AnnQueryArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// Query file in the same encoding as the indexed data. Without it,
    /// planted queries are made by flipping bits of indexed points.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long)]
    pub binary: bool,
    #[arg(long, default_value_t = 200)]
    pub planted: usize,
    /// Bits flipped per planted query.
    #[arg(long, default_value_t = 8)]
    pub flips: usize,
    #[arg(long, default_value_t = 0.9)]
    pub min_recall: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct RffArgs {
    #[command(flatten)]
    pub points: PointsArgs,
    #[arg(long, default_value = "gaussian")]
    pub kernel: String,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 512)]
    pub p: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct RffVerifyArgs {
    #[arg(long, default_value = "gaussian")]
    pub kernel: String,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 5)]
    pub d: usize,
    #[arg(long, default_value_t = 200)]
    pub p: usize,
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 4000)]
    pub trials: usize,
    /// Points used for the sup-error estimate.
    #[arg(long, default_value_t = 40)]
    pub n: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainData {
    /// `X.csv,y.csv`; a two-cluster set is generated when absent.
    #[arg(long, value_delimiter = ',')]
    pub train: Option<Vec<PathBuf>>,
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    #[arg(long, default_value_t = 4.0)]
    pub separation: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictData {
    /// Points to classify; fresh two-cluster points when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// True labels for an accuracy figure.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    #[arg(long, default_value_t = 4.0)]
    pub separation: f64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RksCommand {
    Train(RksTrainArgs),
    Predict(RksPredictArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct RksTrainArgs {
    #[command(flatten)]
    pub data: TrainData,
    /// Dimension of generated training points.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// cos, relu or sign.
    #[arg(long, default_value = "cos")]
    pub activation: String,
    #[arg(long, default_value_t = 200)]
    pub p: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lambda: f64,
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct RksPredictArgs {
    #[command(flatten)]
    pub data: PredictData,
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayersCommand {
    Verify(LayersVerifyArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct LayersVerifyArgs {
    /// Points on the unit sphere.
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value_t = 64)]
    pub d: usize,
    #[arg(long, default_value_t = 4096)]
    pub p: usize,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Lower bound on input norms for the angle check.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Layer widths of the stacked check.
    #[arg(long, value_delimiter = ',', default_value = "1024,1024")]
    pub widths: Vec<usize>,
    /// Trials for the variance-versus-width ratio.
    #[arg(long, default_value_t = 400)]
    pub variance_trials: usize,
    #[arg(long, default_value_t = 64)]
    pub variance_p: usize,
    #[arg(long, default_value_t = 0.95)]
    pub min_pass: f64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleCommand {
    Train(EnsembleTrainArgs),
    Predict(EnsemblePredictArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct EnsembleTrainArgs {
    #[command(flatten)]
    pub data: TrainData,
    /// Dimension of generated training points.
    #[arg(long, default_value_t = 50)]
    pub d: usize,
    /// Ensemble members (plain variant).
    #[arg(long, default_value_t = 11)]
    pub m: usize,
    #[arg(long, default_value_t = 5)]
    pub p: usize,
    /// Blocks for the validated variant; 0 trains the plain one.
    #[arg(long, default_value_t = 0)]
    pub blocks: usize,
    #[arg(long, default_value_t = 5)]
    pub per_block: usize,
    #[arg(long, default_value_t = 0.2)]
    pub validation_fraction: f64,
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EnsemblePredictArgs {
    #[command(flatten)]
    pub data: PredictData,
    #[arg(long)]
    pub model: PathBuf,
}
