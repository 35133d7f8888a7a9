use std::f64::consts::PI;

use anyhow::Result;
use serde::Serialize;
use sketchbench::data::sphere_points;
use sketchbench::layers::{
    angle_preservation_check, distance_preservation_check, psi, sandwich_check, stack_distance_check, variance_ratio,
    AngleCheckReport, DistanceReport, SandwichReport, StackReport, VarianceRatioReport,
};
use sketchbench::random::derive_seed;

use super::stream;
use crate::args::LayersVerifyArgs;
use crate::report::{Outcome, Timings};

const VARIANCE_RANGE: (f64, f64) = (2.5, 6.0);

#[derive(Serialize)]
struct PsiValues {
    at_zero: f64,
    at_half_pi: f64,
    at_pi: f64,
    exact: bool,
}

#[derive(Serialize)]
struct LayersResults {
    n: usize,
    d: usize,
    psi: PsiValues,
    distance: DistanceReport,
    angle: AngleCheckReport,
    sandwich: SandwichReport,
    stack: StackReport,
    variance: VarianceRatioReport,
    min_pass: f64,
    distance_holds: bool,
    angle_holds: bool,
    sandwich_holds: bool,
    variance_holds: bool,
}

pub fn verify(a: &LayersVerifyArgs, seed: u64, t: &mut Timings) -> Result<Outcome> {
    let x = sphere_points(a.n, a.d, derive_seed(seed, stream::DATA))?;
    let psi = PsiValues {
        at_zero: psi(0.0)?,
        at_half_pi: psi(PI / 2.0)?,
        at_pi: psi(PI)?,
        exact: psi(0.0)? == 0.0 && psi(PI)? == 1.0 && (psi(PI / 2.0)? - 1.0 / PI).abs() <= 1e-12,
    };
    let check = |i: u64| derive_seed(seed, stream::CHECK + i);
    let distance = t.time("distance", || distance_preservation_check(&x, a.p, a.delta, a.trials, check(0)))?;
    let angle = t.time("angle", || angle_preservation_check(&x, a.p, a.delta, a.beta, a.trials, check(1)))?;
    let sandwich = t.time("sandwich", || sandwich_check(&x, a.p, a.delta, a.trials, check(2)))?;
    let stack = t.time("stack", || stack_distance_check(&x, &a.widths, a.delta, a.trials, check(3)))?;
    let variance = t.time("variance", || {
        if x.cols() < 2 {
            return Err(sketchbench::Error::InvalidParameter("need n >= 2".into()));
        }
        variance_ratio(x.col(0), x.col(1), a.variance_p, a.variance_trials, check(4))
    })?;
    let distance_holds = distance.pass_fraction >= a.min_pass;
    let angle_holds = angle.pass_fraction >= a.min_pass;
    let sandwich_holds = sandwich.pass_fraction >= a.min_pass;
    let variance_holds = (VARIANCE_RANGE.0..=VARIANCE_RANGE.1).contains(&variance.ratio);
    let verified = psi.exact && distance_holds && angle_holds && sandwich_holds && variance_holds;
    Outcome::checked(
        LayersResults {
            n: a.n,
            d: a.d,
            psi,
            distance,
            angle,
            sandwich,
            stack,
            variance,
            min_pass: a.min_pass,
            distance_holds,
            angle_holds,
            sandwich_holds,
            variance_holds,
        },
        verified,
    )
}
