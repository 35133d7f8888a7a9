mod ann;
mod ensemble;
mod layers;
mod linear;
mod lowrank;
mod rff;
mod rks;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sketchbench::data::{gaussian_points, two_clusters};
use sketchbench::io::{load_labels, load_matrix, save_labels, save_matrix, MatrixFormat};
use sketchbench::random::derive_seed;
use sketchbench::{Error, RealMatrix};

use crate::args::{AnnCommand, Cli, Command, EnsembleCommand, LayersCommand, PointsArgs, RksCommand, TrainData};
use crate::report::{Outcome, Timings};

/// Sub-stream ids under the master seed.
pub(crate) mod stream {
    pub const DATA: u64 = 1;
    pub const HOLDOUT: u64 = 2;
    pub const MODEL: u64 = 3;
    pub const QUERIES: u64 = 4;
    pub const CHECK: u64 = 16;
}

pub fn dispatch(cli: &Cli, t: &mut Timings) -> Result<Outcome> {
    let seed = cli.seed;
    let out = cli.output.as_deref();
    match &cli.command {
        Command::JlBounds(a) => linear::jl_bounds(a),
        Command::JlVerify(a) => linear::jl_verify(a, seed, out, t),
        Command::TailCheck(a) => linear::tail_check(a, seed, t),
        Command::RipCheck(a) => linear::rip_check(a, seed, t),
        Command::NormGap(a) => linear::norm_gap(a, seed, t),
        Command::Lowrank(a) => lowrank::run(a, seed, out, t),
        Command::Ann(AnnCommand::Build(a)) => ann::build(a, seed, t),
        Command::Ann(AnnCommand::Query(a)) => ann::query(a, seed, out, t),
        Command::Rff(a) => rff::features(a, seed, out, t),
        Command::RffVerify(a) => rff::verify(a, seed, t),
        Command::Rks(RksCommand::Train(a)) => rks::train(a, seed, t),
        Command::Rks(RksCommand::Predict(a)) => rks::predict(a, seed, out, t),
        Command::Layers(LayersCommand::Verify(a)) => layers::verify(a, seed, t),
        Command::Ensemble(EnsembleCommand::Train(a)) => ensemble::train(a, seed, t),
        Command::Ensemble(EnsembleCommand::Predict(a)) => ensemble::predict(a, seed, out, t),
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Error::InvalidParameter(msg.into()).into()
}

pub(crate) fn load_points(path: &Path) -> Result<RealMatrix> {
    load_matrix(path, MatrixFormat::from_path(path)).with_context(|| format!("reading {}", path.display()))
}

pub(crate) fn save_points(path: &Path, m: &RealMatrix) -> Result<()> {
    save_matrix(path, m, MatrixFormat::from_path(path)).with_context(|| format!("writing {}", path.display()))
}

pub(crate) fn points(a: &PointsArgs, seed: u64) -> Result<RealMatrix> {
    match &a.input {
        Some(p) => load_points(p),
        None => Ok(gaussian_points(a.n, a.d, derive_seed(seed, stream::DATA))?),
    }
}

pub(crate) fn labelled(x_path: &Path, y_path: &Path) -> Result<(RealMatrix, Vec<usize>)> {
    let x = load_points(x_path)?;
    let y = load_labels(y_path).with_context(|| format!("reading {}", y_path.display()))?;
    if y.len() != x.cols() {
        return Err(invalid(format!("{} labels for {} samples", y.len(), x.cols())));
    }
    Ok((x, y))
}

pub(crate) fn training_set(a: &TrainData, d: usize, seed: u64) -> Result<(RealMatrix, Vec<usize>)> {
    match a.train.as_deref() {
        Some([x, y]) => labelled(x, y),
        Some(other) => Err(invalid(format!("--train takes X,y, got {} paths", other.len()))),
        None => Ok(two_clusters(a.n, d, a.separation, derive_seed(seed, stream::DATA))?),
    }
}

/// Points to classify plus labels when known.
pub(crate) fn prediction_set(
    input: Option<&PathBuf>,
    labels: Option<&PathBuf>,
    n: usize,
    d: usize,
    separation: f64,
    seed: u64,
) -> Result<(RealMatrix, Option<Vec<usize>>)> {
    match (input, labels) {
        (Some(x), Some(y)) => labelled(x, y).map(|(x, y)| (x, Some(y))),
        (Some(x), None) => Ok((load_points(x)?, None)),
        (None, Some(_)) => Err(invalid("--labels needs --input")),
        (None, None) => {
            let (x, y) = two_clusters(n, d, separation, derive_seed(seed, stream::HOLDOUT))?;
            Ok((x, Some(y)))
        }
    }
}

pub(crate) fn write_labels(path: Option<&Path>, labels: &[usize]) -> Result<()> {
    if let Some(p) = path {
        save_labels(p, labels).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}
