//! Randomized rank-p approximation: sketch with a Gaussian matrix, take the
//! top right singular vectors of the sketch, and project the data onto them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{frobenius_norm, svd, RealMatrix};
use crate::random::{sample_projection, DistributionSpec};

/// Constant in `p ≥ c · ln(n) / ε²` used when none is given.
pub const DEFAULT_SKETCH_CONSTANT: f64 = 8.0;

/// `p = ceil(c · ln(n) / ε²)`.
pub fn sketch_size(n: usize, epsilon: f64, c: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon <= 1.0) || n < 2 || !(c > 0.0) {
        return Err(invalid("sketch size needs n >= 2, epsilon in (0, 1], c > 0"));
    }
    Ok((c * (n as f64).ln() / (epsilon * epsilon)).ceil() as usize)
}

/// `ε` implied by a sketch of size `p`: `sqrt(c · ln(n) / p)`.
pub fn implied_epsilon(n: usize, p: usize, c: f64) -> f64 {
    (c * (n as f64).ln() / p as f64).sqrt()
}

/// `Y = (1/√p) Uᵀ X` with standard normal `U` (`d × p`).
pub fn sketch(x: &RealMatrix, p: usize, seed: u64) -> Result<RealMatrix> {
    if p == 0 {
        return Err(invalid("sketch size must be positive"));
    }
    let u = sample_projection(x.rows(), p, DistributionSpec::GaussianUnit, seed)?;
    Ok(u.mat.tr_matmul(x)?.scale(1.0 / (p as f64).sqrt()))
}

#[derive(Debug, Clone)]
pub struct LowRankResult {
    /// `X · B · Bᵀ`, `d × n`.
    pub approx: RealMatrix,
    /// Top-`p` right singular vectors of the sketch, `n × p`.
    pub basis: RealMatrix,
    /// Sketch singular values, nonincreasing.
    pub sketch_singular: Vec<f64>,
    /// `p × n`.
    pub sketch: RealMatrix,
    pub p: usize,
}

/// Randomized rank-`p` approximation of `x`.
pub fn lowrank_approximate(x: &RealMatrix, p: usize, seed: u64) -> Result<LowRankResult> {
    if p == 0 || p > x.cols() {
        return Err(invalid(format!("rank {p} outside [1, n = {}]", x.cols())));
    }
    let y = sketch(x, p, seed)?;
    let dec = svd(&y)?;
    // p ≤ n, so the thin SVD already has exactly p right singular vectors in
    // singular-value order (ties by column index).
    let basis = dec.right;
    let coords = x.matmul(&basis)?;
    let approx = coords.matmul(&basis.transpose())?;
    Ok(LowRankResult { approx, basis, sketch_singular: dec.singular, sketch: y, p })
}

/// Best rank-`p` approximation (truncated SVD).
pub fn best_rank_p(x: &RealMatrix, p: usize) -> Result<RealMatrix> {
    if p == 0 || p > x.rows().min(x.cols()) {
        return Err(invalid(format!("rank {p} outside [1, {}]", x.rows().min(x.cols()))));
    }
    Ok(svd(x)?.reconstruct(Some(p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowRankErrorReport {
    pub p: usize,
    pub epsilon: f64,
    /// `sqrt(8 ln n / p)`: the ε this sketch size supports with `c = 8`.
    pub implied_epsilon: f64,
    /// `‖X − X̃_p‖²_F`.
    pub lhs: f64,
    /// `‖X − X_p‖²_F`.
    pub baseline: f64,
    /// `baseline + 2ε ‖X_p‖²_F`.
    pub bound: f64,
    pub holds: bool,
    /// Sum of the top-`p` squared singular values of the sketch.
    pub sketch_energy: f64,
    /// `‖X_p‖²_F`.
    pub top_energy: f64,
    /// `sketch_energy ≥ (1 − ε) · top_energy`.
    pub energy_holds: bool,
}

/// Certifies a randomized approximation against the best rank-`p` one.
pub fn lowrank_error_report(x: &RealMatrix, result: &LowRankResult, epsilon: f64) -> Result<LowRankErrorReport> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    let p = result.p;
    let dec = svd(x)?;
    let k = p.min(dec.singular.len());
    let top_energy: f64 = dec.singular[..k].iter().map(|s| s * s).sum();
    let baseline: f64 = dec.singular[k..].iter().map(|s| s * s).sum();
    let lhs = frobenius_norm(&x.sub(&result.approx)?).powi(2);
    let bound = baseline + 2.0 * epsilon * top_energy;
    let sketch_energy: f64 = result.sketch_singular.iter().take(p).map(|s| s * s).sum();
    Ok(LowRankErrorReport {
        p,
        epsilon,
        implied_epsilon: implied_epsilon(x.cols().max(2), p, DEFAULT_SKETCH_CONSTANT),
        lhs,
        baseline,
        bound,
        holds: lhs <= bound,
        sketch_energy,
        top_energy,
        energy_holds: sketch_energy >= (1.0 - epsilon) * top_energy,
    })
}
