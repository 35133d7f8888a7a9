use std::path::Path;

use anyhow::Result;
use serde::Serialize;
use sketchbench::linear::{
    chi_square_tail_check, distortion_report, jl_union_bound, norm_concentration_experiment, project, rip_check as rip,
    rip_min_dimension, DistortionReport, JlParams, NormGapPoint, RipReport,
};
use sketchbench::random::{derive_seed, sample_projection, sample_sign_diagonal};
use sketchbench::DistributionSpec;

use super::{invalid, points, save_points, stream};
use crate::args::{JlBoundsArgs, JlVerifyArgs, NormGapArgs, RipCheckArgs, TailCheckArgs};
use crate::report::{Outcome, Timings};

#[derive(Serialize)]
struct BoundsResults {
    #[serde(flatten)]
    params: JlParams,
    union_bound: f64,
}

pub fn jl_bounds(a: &JlBoundsArgs) -> Result<Outcome> {
    let params = JlParams::new(a.n, a.epsilon, a.p)?;
    Outcome::ok(BoundsResults { union_bound: jl_union_bound(a.n, params.p, a.epsilon)?, params })
}

#[derive(Serialize)]
struct VerifyResults {
    n: usize,
    d: usize,
    p: usize,
    p_min: usize,
    distribution: &'static str,
    #[serde(flatten)]
    distortion: DistortionReport,
    violating_fraction: f64,
    /// `slack · n(n−1) · δ`, capped at 1.
    allowed_fraction: f64,
    holds: bool,
}

pub fn jl_verify(a: &JlVerifyArgs, seed: u64, out: Option<&Path>, t: &mut Timings) -> Result<Outcome> {
    let x = t.time("load", || points(&a.points, seed))?;
    let (d, n) = x.shape();
    let p = if a.identity { d } else { a.p.unwrap_or(JlParams::new(n, a.epsilon, None)?.p_min) };
    let params = JlParams::new(n, a.epsilon, Some(p))?;
    let dist = DistributionSpec::from_name(&a.distribution, None)?;
    if matches!(dist, DistributionSpec::BernoulliBinary { .. }) {
        return Err(invalid("jl-verify needs a real-valued distribution"));
    }
    let xproj = t.time("project", || -> Result<_> {
        if a.identity {
            return Ok(x.clone());
        }
        let u = sample_projection(d, p, dist, derive_seed(seed, stream::MODEL))?;
        let signs = if a.sign_flip { Some(sample_sign_diagonal(d, derive_seed(seed, stream::CHECK))?) } else { None };
        Ok(project(&x, &u.mat, dist == DistributionSpec::GaussianUnit, signs.as_ref())?)
    })?;
    let report = t.time("distortion", || distortion_report(&x, &xproj, a.epsilon))?;
    if let Some(path) = out {
        t.time("write", || save_points(path, &xproj))?;
    }
    let allowed = (a.slack * (n * (n - 1)) as f64 * params.delta).min(1.0);
    let fraction = report.violating_fraction();
    Outcome::checked(
        VerifyResults {
            n,
            d,
            p,
            p_min: params.p_min,
            distribution: if a.identity { "identity" } else { dist.name() },
            distortion: report,
            violating_fraction: fraction,
            allowed_fraction: allowed,
            holds: fraction <= allowed,
        },
        fraction <= allowed,
    )
}

pub fn tail_check(a: &TailCheckArgs, seed: u64, t: &mut Timings) -> Result<Outcome> {
    let r = t.time("check", || chi_square_tail_check(a.p, a.d, a.beta, a.trials, seed))?;
    Outcome::checked(r, r.holds)
}

#[derive(Serialize)]
struct RipResults {
    d: usize,
    p: usize,
    p_min: usize,
    #[serde(flatten)]
    report: RipReport,
    max_violations: f64,
    holds: bool,
}

pub fn rip_check(a: &RipCheckArgs, seed: u64, t: &mut Timings) -> Result<Outcome> {
    let p_min = rip_min_dimension(a.d, a.k, a.epsilon)?;
    let p = a.p.unwrap_or(p_min);
    let u = t.time("sample", || sample_projection(a.d, p, DistributionSpec::GaussianScaled, derive_seed(seed, stream::MODEL)))?;
    let report = t.time("check", || rip(&u.mat, a.k, a.epsilon, a.trials, derive_seed(seed, stream::CHECK)))?;
    let holds = report.violating_fraction <= a.max_violations;
    Outcome::checked(RipResults { d: a.d, p, p_min, report, max_violations: a.max_violations, holds }, holds)
}

#[derive(Serialize)]
struct GapResults {
    n: usize,
    r: f64,
    series: Vec<NormGapPoint>,
}

pub fn norm_gap(a: &NormGapArgs, seed: u64, t: &mut Timings) -> Result<Outcome> {
    let series = t.time("experiment", || norm_concentration_experiment(a.n, &a.d_list, a.r, a.repeats, seed))?;
    Outcome::ok(GapResults { n: a.n, r: a.r, series })
}
