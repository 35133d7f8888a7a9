//! Linear random projection, subspace projection/reconstruction, and the
//! Johnson-Lindenstrauss verification suite.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Result};
use crate::linalg::{
    dot, interpolation_norm, lp_norm, norm2, orthonormalize_columns, squared_distance, Cholesky,
    RealMatrix,
};
use crate::random::{derive_seed, sample_projection, DistributionSpec, SignVector, Stream};

/// `Uᵀ X` (optionally `Uᵀ D X` with `D = diag(sign_flip)`), scaled by `1/√p`
/// when `normalized`.
pub fn project(
    x: &RealMatrix,
    u: &RealMatrix,
    normalized: bool,
    sign_flip: Option<&SignVector>,
) -> Result<RealMatrix> {
    if u.rows() != x.rows() {
        return Err(shape(format!("projection has {} rows, data has {}", u.rows(), x.rows())));
    }
    let mut out = match sign_flip {
        None => u.tr_matmul(x)?,
        Some(signs) => {
            if signs.len() != x.rows() {
                return Err(shape(format!("{} signs for dimension {}", signs.len(), x.rows())));
            }
            let flipped = RealMatrix::from_fn(x.rows(), x.cols(), |i, j| signs.signs[i] * x.get(i, j));
            u.tr_matmul(&flipped)?
        }
    };
    if normalized {
        out = out.scale(1.0 / (u.cols() as f64).sqrt());
    }
    Ok(out)
}

/// Orthogonal projector `U (UᵀU)⁻¹ Uᵀ` onto the column space of `U`.
pub fn hat_matrix(u: &RealMatrix) -> Result<RealMatrix> {
    if u.cols() > u.rows() {
        return Err(crate::Error::Singular);
    }
    let gram = u.tr_matmul(u)?;
    let chol = Cholesky::factor(&gram, 1e-12)?;
    // (UᵀU)⁻¹ Uᵀ, then U times that
    let coeffs = chol.solve(&u.transpose())?;
    u.matmul(&coeffs)
}

/// `U · X̃`: maps projected coordinates back into the input space.
pub fn reconstruct(xproj: &RealMatrix, u: &RealMatrix) -> Result<RealMatrix> {
    if u.cols() != xproj.rows() {
        return Err(shape(format!("basis has {} columns, coordinates have {} rows", u.cols(), xproj.rows())));
    }
    let gram = u.tr_matmul(u)?;
    if gram.max_abs_diff(&RealMatrix::identity(u.cols())) > 1e-8 {
        return Err(invalid("reconstruction basis must have orthonormal columns"));
    }
    u.matmul(xproj)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

/// Smallest `p` with `p ≥ 4 (ε²/2 − ε³/3)⁻¹ ln n`.
pub fn jl_min_dimension(n: usize, epsilon: f64) -> Result<usize> {
    check_epsilon(epsilon)?;
    if n < 2 {
        return Err(invalid("need at least two points"));
    }
    let denom = epsilon * epsilon / 2.0 - epsilon.powi(3) / 3.0;
    Ok((4.0 / denom * (n as f64).ln()).ceil() as usize)
}

/// Per-pair failure probability `min(1, 2 exp(−(ε² − ε³) p / 4))`.
pub fn jl_failure_bound(p: usize, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if p == 0 {
        return Err(invalid("p must be positive"));
    }
    let e2 = epsilon * epsilon;
    Ok((2.0 * (-(e2 - e2 * epsilon) * p as f64 / 4.0).exp()).min(1.0))
}

/// Union bound over all pairs: `min(1, n(n−1)/2 · δ)`.
pub fn jl_union_bound(n: usize, p: usize, epsilon: f64) -> Result<f64> {
    let pairs = (n * n.saturating_sub(1)) as f64 / 2.0;
    Ok((pairs * jl_failure_bound(p, epsilon)?).min(1.0))
}

/// Dimension and failure probability of a JL embedding for `n` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JlParams {
    pub n: usize,
    pub epsilon: f64,
    pub p_min: usize,
    /// Per-pair failure probability at `p`.
    pub delta: f64,
    pub p: usize,
}

impl JlParams {
    /// Parameters at `p` (defaults to `p_min`).
    pub fn new(n: usize, epsilon: f64, p: Option<usize>) -> Result<Self> {
        let p_min = jl_min_dimension(n, epsilon)?;
        let p = p.unwrap_or(p_min);
        Ok(Self { n, epsilon, p_min, delta: jl_failure_bound(p, epsilon)?, p })
    }
}

/// Pairwise squared-distance distortion of a projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub epsilon: f64,
    pub pairs_total: usize,
    /// Pairs with coincident inputs; excluded from every ratio statistic.
    pub pairs_zero_distance: usize,
    /// Pairs whose squared distance shrank below `(1 − ε)`.
    pub pairs_below: usize,
    /// Pairs whose squared distance grew beyond `(1 + ε)`.
    pub pairs_above: usize,
    pub max_distortion: f64,
    pub mean_distortion: f64,
    pub theoretical_pair_delta: f64,
    pub union_bound: f64,
}

impl DistortionReport {
    pub fn violating_fraction(&self) -> f64 {
        let counted = self.pairs_total - self.pairs_zero_distance;
        if counted == 0 {
            0.0
        } else {
            (self.pairs_below + self.pairs_above) as f64 / counted as f64
        }
    }
}

/// Compares every pair of columns of `x` with the same pair in `xproj`.
///
/// `xproj` must come from a distance-preserving scaling (normalized map or
/// `N(0, 1/p)` entries) for the ratios to be meaningful.
pub fn distortion_report(x: &RealMatrix, xproj: &RealMatrix, epsilon: f64) -> Result<DistortionReport> {
    check_epsilon(epsilon)?;
    let n = x.cols();
    if xproj.cols() != n {
        return Err(shape(format!("{n} inputs but {} projections", xproj.cols())));
    }
    if n < 2 {
        return Err(invalid("distortion needs at least two points"));
    }
    let per_row: Vec<(usize, usize, usize, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (mut zero, mut below, mut above) = (0, 0, 0);
            let (mut max_d, mut sum_d) = (0.0f64, 0.0f64);
            for j in i + 1..n {
                let before = squared_distance(x.col(i), x.col(j));
                if before == 0.0 {
                    zero += 1;
                    continue;
                }
                let ratio = squared_distance(xproj.col(i), xproj.col(j)) / before;
                if ratio < 1.0 - epsilon {
                    below += 1;
                } else if ratio > 1.0 + epsilon {
                    above += 1;
                }
                let dist = (ratio - 1.0).abs();
                max_d = max_d.max(dist);
                sum_d += dist;
            }
            (zero, below, above, max_d, sum_d)
        })
        .collect();

    let pairs_total = n * (n - 1) / 2;
    let mut report = DistortionReport {
        epsilon,
        pairs_total,
        pairs_zero_distance: 0,
        pairs_below: 0,
        pairs_above: 0,
        max_distortion: 0.0,
        mean_distortion: 0.0,
        theoretical_pair_delta: jl_failure_bound(xproj.rows(), epsilon)?,
        union_bound: jl_union_bound(n, xproj.rows(), epsilon)?,
    };
    let mut sum = 0.0;
    for (zero, below, above, max_d, sum_d) in per_row {
        report.pairs_zero_distance += zero;
        report.pairs_below += below;
        report.pairs_above += above;
        report.max_distortion = report.max_distortion.max(max_d);
        sum += sum_d;
    }
    let counted = pairs_total - report.pairs_zero_distance;
    if counted > 0 {
        report.mean_distortion = sum / counted as f64;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationReport {
    pub p: usize,
    pub trials: usize,
    /// Mean of `‖Uᵀx‖² / ‖x‖²` over independent `U ~ N(0, 1/p)`.
    pub mean_ratio: f64,
}

/// Monte Carlo estimate of `E ‖Uᵀx‖² / ‖x‖²` (exactly 1 in expectation).
pub fn expectation_preservation_check(x: &[f64], p: usize, trials: usize, seed: u64) -> Result<ExpectationReport> {
    if trials < 100 {
        return Err(invalid("need at least 100 trials"));
    }
    if x.is_empty() {
        return Err(invalid("empty vector"));
    }
    let norm_sq = dot(x, x);
    if norm_sq == 0.0 {
        return Err(invalid("zero vector has no distance to preserve"));
    }
    let ratios: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let u = sample_projection(x.len(), p, DistributionSpec::GaussianScaled, derive_seed(seed, t as u64))?;
            let y = u.mat.tr_matvec(x)?;
            Ok(dot(&y, &y) / norm_sq)
        })
        .collect::<Result<_>>()?;
    Ok(ExpectationReport { p, trials, mean_ratio: ratios.iter().sum::<f64>() / trials as f64 })
}

/// Which tail of the projected squared length is examined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    /// `P(L ≤ βp/d)`, β < 1.
    Lower,
    /// `P(L ≥ βp/d)`, β > 1.
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub p: usize,
    pub d: usize,
    pub beta: f64,
    pub tail: Tail,
    pub trials: usize,
    pub empirical_prob: f64,
    pub std_error: f64,
    pub bound: f64,
    /// `empirical_prob ≤ bound + 3 · std_error`.
    pub holds: bool,
}

/// `exp((p/2)(1 − β + ln β))`.
pub fn chi_square_tail_bound(p: usize, beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    Ok((p as f64 / 2.0 * (1.0 - beta + beta.ln())).exp())
}

/// Squared length `L` of a random unit vector projected onto a random
/// `p`-dimensional subspace of `R^d`, versus the closed-form tail bound.
///
/// The subspace is the span of a Gram-Schmidt-orthonormalized Gaussian
/// `d × p` matrix, so `E[L] = p/d`.
pub fn chi_square_tail_check(p: usize, d: usize, beta: f64, trials: usize, seed: u64) -> Result<TailReport> {
    if p == 0 || p >= d {
        return Err(invalid(format!("need 0 < p < d, got p={p}, d={d}")));
    }
    if beta == 1.0 {
        return Err(invalid("beta = 1 gives the trivial bound 1"));
    }
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let bound = chi_square_tail_bound(p, beta)?;
    let tail = if beta < 1.0 { Tail::Lower } else { Tail::Upper };
    let threshold = beta * p as f64 / d as f64;
    let hits: usize = (0..trials)
        .into_par_iter()
        .map(|t| {
            let basis = sample_projection(d, p, DistributionSpec::GaussianUnit, derive_seed(seed, 2 * t as u64))?;
            let q = orthonormalize_columns(&basis.mat)?;
            let mut stream = Stream::new(derive_seed(seed, 2 * t as u64 + 1), 0);
            let x = stream.gaussian_vec(d);
            let y = q.tr_matvec(&x)?;
            let l = dot(&y, &y) / dot(&x, &x);
            let hit = match tail {
                Tail::Lower => l <= threshold,
                Tail::Upper => l >= threshold,
            };
            Ok(usize::from(hit))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    let prob = hits as f64 / trials as f64;
    let se = (prob * (1.0 - prob) / trials as f64).sqrt();
    Ok(TailReport {
        p,
        d,
        beta,
        tail,
        trials,
        empirical_prob: prob,
        std_error: se,
        bound,
        holds: prob <= bound + 3.0 * se,
    })
}

/// Random unit vector with exactly `k` nonzero coordinates: uniform support,
/// Gaussian values, then normalized.
pub fn sample_sparse_unit(d: usize, k: usize, stream: &mut Stream) -> Vec<(usize, f64)> {
    loop {
        let support = stream.sample_indices(d, k);
        let values = stream.gaussian_vec(k);
        let norm = norm2(&values);
        if norm > 0.0 {
            return support.into_iter().zip(values.into_iter().map(|v| v / norm)).collect();
        }
    }
}

/// `p ≥ ε⁻² k ln(d/k)`, rounded up.
pub fn rip_min_dimension(d: usize, k: usize, epsilon: f64) -> Result<usize> {
    check_epsilon(epsilon)?;
    if k == 0 || k > d {
        return Err(invalid(format!("sparsity {k} outside [1, {d}]")));
    }
    Ok(((k as f64) * (d as f64 / k as f64).ln() / (epsilon * epsilon)).ceil().max(1.0) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RipReport {
    pub k: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub violations: usize,
    pub violating_fraction: f64,
}

/// Fraction of random `k`-sparse unit vectors whose squared length under `Uᵀ`
/// leaves `[1 − ε, 1 + ε]`. `U` should have `N(0, 1/p)`-scaled entries.
pub fn rip_check(u: &RealMatrix, k: usize, epsilon: f64, trials: usize, seed: u64) -> Result<RipReport> {
    check_epsilon(epsilon)?;
    let d = u.rows();
    if k == 0 || k > d {
        return Err(invalid(format!("sparsity {k} outside [1, {d}]")));
    }
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let violations: usize = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut stream = Stream::new(seed, t as u64);
            let x = sample_sparse_unit(d, k, &mut stream);
            let len_sq: f64 = (0..u.cols())
                .map(|c| {
                    let col = u.col(c);
                    let y: f64 = x.iter().map(|&(i, v)| col[i] * v).sum();
                    y * y
                })
                .sum();
            usize::from(len_sq < 1.0 - epsilon || len_sq > 1.0 + epsilon)
        })
        .sum();
    Ok(RipReport {
        k,
        epsilon,
        trials,
        violations,
        violating_fraction: violations as f64 / trials as f64,
    })
}

/// Lower and upper constants of the interpolation-norm embedding.
pub const INTERPOLATION_LOWER: f64 = 0.63;
pub const INTERPOLATION_UPPER: f64 = 1.63;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub s: usize,
    pub p: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub interpolation_norm: f64,
    /// Fraction of trials with `‖Uᵀx‖₁ < (0.63 − ε)‖x‖_{1,2,s}`.
    pub lo_violations: f64,
    /// Fraction of trials with `‖Uᵀx‖₁ > (1.63 + ε)‖x‖_{1,2,s}`.
    pub hi_violations: f64,
    pub mean_ratio: f64,
    /// Set when either side is violated in more than 10% of trials: the
    /// constants are empirical targets for this matrix family, not guarantees.
    pub flagged: bool,
}

/// Compares `‖Uᵀx‖₁` against the interpolation norm of `x` for `U` with
/// i.i.d. `N(0,1)/p` entries.
pub fn interpolation_embedding_check(
    v: &[f64],
    s: usize,
    epsilon: f64,
    p: usize,
    trials: usize,
    seed: u64,
) -> Result<InterpolationReport> {
    let norm = interpolation_norm(v, s)?;
    if norm == 0.0 {
        return Err(invalid("zero vector"));
    }
    if trials == 0 || p == 0 {
        return Err(invalid("need positive p and trials"));
    }
    let ratios: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let u = sample_projection(v.len(), p, DistributionSpec::GaussianUnit, derive_seed(seed, t as u64))?;
            let y = u.mat.tr_matvec(v)?;
            Ok(lp_norm(&y, 1.0)? / p as f64 / norm)
        })
        .collect::<Result<_>>()?;
    let lo = ratios.iter().filter(|&&r| r < INTERPOLATION_LOWER - epsilon).count() as f64 / trials as f64;
    let hi = ratios.iter().filter(|&&r| r > INTERPOLATION_UPPER + epsilon).count() as f64 / trials as f64;
    Ok(InterpolationReport {
        s,
        p,
        epsilon,
        trials,
        interpolation_norm: norm,
        lo_violations: lo,
        hi_violations: hi,
        mean_ratio: ratios.iter().sum::<f64>() / trials as f64,
        flagged: lo > 0.1 || hi > 0.1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormGapPoint {
    pub d: usize,
    /// Mean over repeats of `max_i ‖x_i‖_r − min_i ‖x_i‖_r`.
    pub mean_gap: f64,
}

/// Spread of ℓr distances from the origin for `n` uniform points in `[0,1]^d`.
pub fn norm_concentration_experiment(
    n: usize,
    d_list: &[usize],
    r: f64,
    repeats: usize,
    seed: u64,
) -> Result<Vec<NormGapPoint>> {
    if n < 2 || repeats == 0 {
        return Err(invalid("need n >= 2 points and at least one repeat"));
    }
    if d_list.iter().any(|&d| d == 0) || d_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("d_list must be positive and strictly increasing"));
    }
    d_list
        .iter()
        .enumerate()
        .map(|(di, &d)| {
            let gaps: Vec<f64> = (0..repeats)
                .into_par_iter()
                .map(|rep| {
                    let mut stream = Stream::new(derive_seed(seed, di as u64), rep as u64);
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    let mut point = vec![0.0; d];
                    for _ in 0..n {
                        point.iter_mut().for_each(|v| *v = stream.uniform());
                        let len = lp_norm(&point, r)?;
                        lo = lo.min(len);
                        hi = hi.max(len);
                    }
                    Ok(hi - lo)
                })
                .collect::<Result<_>>()?;
            Ok(NormGapPoint { d, mean_gap: gaps.iter().sum::<f64>() / repeats as f64 })
        })
        .collect()
}
