use std::path::Path;

use anyhow::Result;
use serde::Serialize;
use sketchbench::data::low_rank_plus_noise;
use sketchbench::lowrank::{lowrank_approximate, lowrank_error_report, sketch_size, LowRankErrorReport};
use sketchbench::random::derive_seed;

use super::{load_points, save_points, stream};
use crate::args::LowrankArgs;
use crate::report::{Outcome, Timings};

#[derive(Serialize)]
struct LowrankResults {
    d: usize,
    n: usize,
    /// `ceil(c ln n / ε²)` before capping at `n`.
    sketch_size: usize,
    capped: bool,
    #[serde(flatten)]
    report: LowRankErrorReport,
    sketch_singular: Vec<f64>,
}

pub fn run(a: &LowrankArgs, seed: u64, out: Option<&Path>, t: &mut Timings) -> Result<Outcome> {
    let x = t.time("load", || -> Result<_> {
        match &a.input {
            Some(p) => load_points(p),
            None => Ok(low_rank_plus_noise(a.rows, a.cols, a.true_rank, a.noise, derive_seed(seed, stream::DATA))?),
        }
    })?;
    let (d, n) = x.shape();
    let wanted = sketch_size(n, a.epsilon, a.c)?;
    let p = a.rank.unwrap_or(wanted.min(n));
    let result = t.time("approximate", || lowrank_approximate(&x, p, derive_seed(seed, stream::MODEL)))?;
    let report = t.time("certify", || lowrank_error_report(&x, &result, a.epsilon))?;
    if let Some(path) = out {
        t.time("write", || save_points(path, &result.approx))?;
    }
    let verified = report.holds && report.energy_holds;
    Outcome::checked(
        LowrankResults {
            d,
            n,
            sketch_size: wanted,
            capped: a.rank.is_none() && wanted > n,
            report,
            sketch_singular: result.sketch_singular,
        },
        verified,
    )
}
