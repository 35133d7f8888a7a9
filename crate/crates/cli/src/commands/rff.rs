use std::path::Path;

use anyhow::Result;
use serde::Serialize;
use sketchbench::data::gaussian_points;
use sketchbench::linalg::squared_distance;
use sketchbench::random::derive_seed;
use sketchbench::rff::{
    approx_kernel_matrix, exact_kernel, feature_matrix, hoeffding_check, sample_spectral, sup_error_bound,
    sup_error_estimate, KernelSpec,
};

use super::{points, save_points, stream};
use crate::args::{RffArgs, RffVerifyArgs};
use crate::report::{Outcome, Timings};

/// Pairs used to summarize kernel error in `rff`.
const ERROR_SAMPLE: usize = 50;

#[derive(Serialize)]
struct FeatureResults {
    kernel: KernelSpec,
    d: usize,
    n: usize,
    p: usize,
    feature_dim: usize,
    /// Over all pairs among the first points (at most 50).
    mean_abs_kernel_error: f64,
    max_abs_kernel_error: f64,
}

pub fn features(a: &RffArgs, seed: u64, out: Option<&Path>, t: &mut Timings) -> Result<Outcome> {
    let kernel = KernelSpec::from_name(&a.kernel, a.sigma)?;
    let x = t.time("load", || points(&a.points, seed))?;
    let fm = t.time("sample", || sample_spectral(kernel, x.rows(), a.p, derive_seed(seed, stream::MODEL)))?;
    let z = t.time("features", || feature_matrix(&x, &fm))?;
    if let Some(path) = out {
        t.time("write", || save_points(path, &z))?;
    }
    let m = x.cols().min(ERROR_SAMPLE);
    let (mut sum, mut max, mut pairs) = (0.0, 0.0f64, 0usize);
    t.time("error", || -> Result<()> {
        let idx: Vec<usize> = (0..m).collect();
        let approx = approx_kernel_matrix(&z.select_columns(&idx)?);
        for i in 0..m {
            for j in i + 1..m {
                let e = (approx.get(i, j) - exact_kernel(kernel, x.col(i), x.col(j))?).abs();
                sum += e;
                max = max.max(e);
                pairs += 1;
            }
        }
        Ok(())
    })?;
    Outcome::ok(FeatureResults {
        kernel,
        d: x.rows(),
        n: x.cols(),
        p: a.p,
        feature_dim: z.rows(),
        mean_abs_kernel_error: if pairs > 0 { sum / pairs as f64 } else { 0.0 },
        max_abs_kernel_error: max,
    })
}

#[derive(Serialize)]
struct VerifyResults {
    kernel: KernelSpec,
    d: usize,
    p: usize,
    epsilon: f64,
    trials: usize,
    empirical_prob: f64,
    std_error: f64,
    bound: f64,
    holds: bool,
    /// Largest kernel error over pairs of `n` points for one map.
    sup_error: f64,
    /// Tail bound on that error; absent when the spectral second moment
    /// is infinite.
    sup_error_bound: Option<f64>,
    diameter: f64,
}

pub fn verify(a: &RffVerifyArgs, seed: u64, t: &mut Timings) -> Result<Outcome> {
    let kernel = KernelSpec::from_name(&a.kernel, a.sigma)?;
    let h = t.time("hoeffding", || hoeffding_check(kernel, a.d, a.p, a.epsilon, a.trials, seed))?;
    let x = gaussian_points(a.n, a.d, derive_seed(seed, stream::DATA))?.scale(a.sigma / (a.d as f64).sqrt());
    let sup = t.time("sup_error", || sup_error_estimate(kernel, &x, a.p, derive_seed(seed, stream::CHECK)))?;
    let mut diam = 0.0f64;
    for i in 0..x.cols() {
        for j in i + 1..x.cols() {
            diam = diam.max(squared_distance(x.col(i), x.col(j)));
        }
    }
    let diam = diam.sqrt();
    Outcome::checked(
        VerifyResults {
            kernel,
            d: a.d,
            p: a.p,
            epsilon: a.epsilon,
            trials: h.trials,
            empirical_prob: h.empirical_prob,
            std_error: h.std_error,
            bound: h.bound,
            holds: h.holds,
            sup_error: sup,
            sup_error_bound: sup_error_bound(kernel, a.d, diam, a.p, a.epsilon),
            diameter: diam,
        },
        h.holds,
    )
}
