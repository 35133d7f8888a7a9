//! Random ReLU layers and empirical checks of how they move distances and
//! angles.
//!
//! Layer weights are `N(0, 1/p)`. Two centres are reported for the squared
//! output distance of a pair:
//!
//! * the stated one, `½‖xᵢ − xⱼ‖² + ‖xᵢ‖‖xⱼ‖ψ`, which the pass fractions use;
//! * the arc-cosine expectation, `½‖xᵢ‖² + ½‖xⱼ‖² − (‖xᵢ‖‖xⱼ‖/π)(sin θ + (π − θ) cos θ)`,
//!   which equals `½‖xᵢ − xⱼ‖² − ‖xᵢ‖‖xⱼ‖ψ`.
//!
//! The two differ by `2‖xᵢ‖‖xⱼ‖ψ`, so the stated centre only matches nearly
//! parallel pairs.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Result};
use crate::linalg::{dot, norm2, squared_distance, RealMatrix};
use crate::random::{derive_seed, sample_projection, DistributionSpec, ProjectionMatrix};

/// `(sin θ − θ cos θ)/π` for `θ ∈ [0, π]`.
pub fn psi(theta: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(invalid(format!("angle {theta} outside [0, π]")));
    }
    Ok((theta.sin() - theta * theta.cos()) / PI)
}

/// Angle between two nonzero vectors, in `[0, π]`.
pub fn angle(x: &[f64], y: &[f64]) -> f64 {
    let c = dot(x, y) / (norm2(x) * norm2(y));
    c.clamp(-1.0, 1.0).acos()
}

/// `max(0, Uᵀx)`.
pub fn relu_layer(x: &[f64], u: &ProjectionMatrix) -> Result<Vec<f64>> {
    let mut out = u.mat.tr_matvec(x)?;
    for v in &mut out {
        *v = v.max(0.0);
    }
    Ok(out)
}

fn relu_matrix(x: &RealMatrix, u: &RealMatrix) -> Result<RealMatrix> {
    let mut out = u.tr_matmul(x)?.into_col_major();
    for v in &mut out {
        *v = v.max(0.0);
    }
    RealMatrix::from_col_major(u.cols(), x.cols(), out)
}

/// Stated centre `½‖x − y‖² + ‖x‖‖y‖ψ(θ)`.
pub fn stated_center(x: &[f64], y: &[f64]) -> f64 {
    let (nx, ny) = (norm2(x), norm2(y));
    let psi_term = if nx == 0.0 || ny == 0.0 { 0.0 } else { nx * ny * psi(angle(x, y)).expect("angle in range") };
    0.5 * squared_distance(x, y) + psi_term
}

/// `E‖g(Uᵀx) − g(Uᵀy)‖²` for `U` with `N(0, 1/p)` entries.
pub fn expected_center(x: &[f64], y: &[f64]) -> f64 {
    let (nx, ny) = (norm2(x), norm2(y));
    let cross = if nx == 0.0 || ny == 0.0 {
        0.0
    } else {
        let t = angle(x, y);
        nx * ny * (t.sin() + (PI - t) * t.cos()) / PI
    };
    0.5 * nx * nx + 0.5 * ny * ny - cross
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    pub layers: Vec<ProjectionMatrix>,
    pub seed: u64,
}

impl LayerStack {
    /// Layer `l` maps `widths[l-1]` (or `d`) to `widths[l]`, seeded with
    /// stream `l` of `seed`.
    pub fn sample(d: usize, widths: &[usize], seed: u64) -> Result<Self> {
        let mut layers = Vec::with_capacity(widths.len());
        let mut input = d;
        for (l, &w) in widths.iter().enumerate() {
            layers.push(sample_projection(input, w, DistributionSpec::GaussianScaled, derive_seed(seed, l as u64))?);
            input = w;
        }
        Ok(Self { layers, seed })
    }

    pub fn from_layers(layers: Vec<ProjectionMatrix>, seed: u64) -> Result<Self> {
        for (l, pair) in layers.windows(2).enumerate() {
            if pair[0].p() != pair[1].d() {
                return Err(shape(format!("layer {l} outputs {} values, layer {} expects {}", pair[0].p(), l + 1, pair[1].d())));
            }
        }
        Ok(Self { layers, seed })
    }
}

pub fn stack_forward(x: &[f64], stack: &LayerStack) -> Result<Vec<f64>> {
    let mut v = x.to_vec();
    for layer in &stack.layers {
        v = relu_layer(&v, layer)?;
    }
    Ok(v)
}

/// Applies the stack to every column.
pub fn stack_forward_matrix(x: &RealMatrix, stack: &LayerStack) -> Result<RealMatrix> {
    let mut v = x.clone();
    for layer in &stack.layers {
        v = relu_matrix(&v, &layer.mat)?;
    }
    Ok(v)
}

fn check_unit_columns(x: &RealMatrix) -> Result<()> {
    for (j, c) in x.columns().enumerate() {
        let n = norm2(c);
        if (n - 1.0).abs() > 1e-8 {
            return Err(invalid(format!("column {j} has norm {n}; normalize inputs to the unit sphere first")));
        }
    }
    Ok(())
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Layer outputs for one trial: `U` is `d × p` from stream `t` of `seed`.
fn trial_outputs(x: &RealMatrix, p: usize, seed: u64, t: usize) -> Result<RealMatrix> {
    let u = sample_projection(x.rows(), p, DistributionSpec::GaussianScaled, derive_seed(seed, t as u64))?;
    relu_matrix(x, &u.mat)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleReport {
    pub i: usize,
    pub j: usize,
    pub theta_in: f64,
    /// `None` when either output is the zero vector.
    pub theta_out: Option<f64>,
    pub psi_value: f64,
    /// `|‖gΔ‖² − (½‖Δ‖² + ‖xᵢ‖‖xⱼ‖ψ)|`.
    pub lhs_distance: f64,
    /// `|‖gΔ‖² − expected_center|`.
    pub expected_deviation: f64,
    pub delta_used: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub p: usize,
    pub delta: f64,
    pub trials: usize,
    pub events: usize,
    /// Fraction of (pair, trial) events within `δ` of the stated centre.
    pub pass_fraction: f64,
    /// Same, measured against the arc-cosine expectation.
    pub expected_center_pass_fraction: f64,
    pub mean_lhs_distance: f64,
    pub mean_expected_deviation: f64,
    /// Per-pair details from the first trial.
    pub first_trial: Vec<AngleReport>,
}

pub fn distance_preservation_check(x: &RealMatrix, p: usize, delta: f64, trials: usize, seed: u64) -> Result<DistanceReport> {
    check_unit_columns(x)?;
    check_common(p, delta, trials)?;
    let pr = pairs(x.cols());
    let per_trial: Vec<Vec<AngleReport>> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<AngleReport>> {
            let g = trial_outputs(x, p, seed, t)?;
            Ok(pr
                .iter()
                .map(|&(i, j)| {
                    let (xi, xj) = (x.col(i), x.col(j));
                    let out = squared_distance(g.col(i), g.col(j));
                    let theta_in = angle(xi, xj);
                    let (gi, gj) = (g.col(i), g.col(j));
                    let theta_out = (norm2(gi) > 0.0 && norm2(gj) > 0.0).then(|| angle(gi, gj));
                    AngleReport {
                        i,
                        j,
                        theta_in,
                        theta_out,
                        psi_value: psi(theta_in).expect("angle in range"),
                        lhs_distance: (out - stated_center(xi, xj)).abs(),
                        expected_deviation: (out - expected_center(xi, xj)).abs(),
                        delta_used: delta,
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let events = trials * pr.len();
    let all = per_trial.iter().flatten();
    let stated_pass = all.clone().filter(|r| r.lhs_distance <= delta).count();
    let expected_pass = all.clone().filter(|r| r.expected_deviation <= delta).count();
    let mean = |f: fn(&AngleReport) -> f64| all.clone().map(f).sum::<f64>() / events.max(1) as f64;
    Ok(DistanceReport {
        p,
        delta,
        trials,
        events,
        pass_fraction: stated_pass as f64 / events.max(1) as f64,
        expected_center_pass_fraction: expected_pass as f64 / events.max(1) as f64,
        mean_lhs_distance: mean(|r| r.lhs_distance),
        mean_expected_deviation: mean(|r| r.expected_deviation),
        first_trial: per_trial.into_iter().next().unwrap_or_default(),
    })
}

fn check_common(p: usize, delta: f64, trials: usize) -> Result<()> {
    if p == 0 || trials == 0 {
        return Err(invalid("p and trials must be positive"));
    }
    if !(delta > 0.0) {
        return Err(invalid(format!("delta must be positive, got {delta}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleCheckReport {
    pub p: usize,
    pub delta: f64,
    pub beta: f64,
    /// `15δ / (β² − 2δ)`.
    pub slack: f64,
    pub trials: usize,
    pub events: usize,
    /// Events with a zero output vector; excluded from the fraction.
    pub skipped: usize,
    pub pass_fraction: f64,
    pub max_discrepancy: f64,
    /// Events whose target `cos θ + ψ` exceeds 1 (not clamped).
    pub target_above_one: usize,
}

pub fn angle_preservation_check(
    x: &RealMatrix,
    p: usize,
    delta: f64,
    beta: f64,
    trials: usize,
    seed: u64,
) -> Result<AngleCheckReport> {
    check_common(p, delta, trials)?;
    if !(beta > 0.0 && beta <= 1.0) || beta * beta <= 2.0 * delta {
        return Err(invalid(format!("need 0 < β ≤ 1 and β² > 2δ, got β = {beta}, δ = {delta}")));
    }
    for (j, c) in x.columns().enumerate() {
        let n = norm2(c);
        if n < beta - 1e-12 || n > 1.0 + 1e-12 {
            return Err(invalid(format!("column {j} has norm {n}, outside [β, 1]")));
        }
    }
    let slack = 15.0 * delta / (beta * beta - 2.0 * delta);
    let pr = pairs(x.cols());
    let per_trial: Vec<(usize, usize, usize, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<_> {
            let g = trial_outputs(x, p, seed, t)?;
            let (mut pass, mut skip, mut above, mut worst) = (0, 0, 0, 0.0f64);
            for &(i, j) in &pr {
                let theta = angle(x.col(i), x.col(j));
                let target = theta.cos() + psi(theta).expect("angle in range");
                if target > 1.0 {
                    above += 1;
                }
                let (gi, gj) = (g.col(i), g.col(j));
                if norm2(gi) == 0.0 || norm2(gj) == 0.0 {
                    skip += 1;
                    continue;
                }
                let disc = (angle(gi, gj).cos() - target).abs();
                worst = worst.max(disc);
                if disc <= slack {
                    pass += 1;
                }
            }
            Ok((pass, skip, above, worst))
        })
        .collect::<Result<_>>()?;
    let events = trials * pr.len();
    let passed: usize = per_trial.iter().map(|r| r.0).sum();
    let skipped: usize = per_trial.iter().map(|r| r.1).sum();
    let counted = events - skipped;
    Ok(AngleCheckReport {
        p,
        delta,
        beta,
        slack,
        trials,
        events,
        skipped,
        pass_fraction: if counted == 0 { 0.0 } else { passed as f64 / counted as f64 },
        max_discrepancy: per_trial.iter().map(|r| r.3).fold(0.0, f64::max),
        target_above_one: per_trial.iter().map(|r| r.2).sum(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub p: usize,
    pub delta: f64,
    pub trials: usize,
    pub events: usize,
    /// Fraction with `½‖Δ‖² − δ ≤ ‖gΔ‖² ≤ ‖Δ‖² + δ`.
    pub pass_fraction: f64,
    pub lower_violations: usize,
    pub upper_violations: usize,
    /// Smallest observed `‖gΔ‖ / ‖Δ‖` over distinct pairs.
    pub min_lipschitz_ratio: f64,
    /// Largest observed `‖gΔ‖ / ‖UᵀΔ‖`; ReLU guarantees at most 1.
    pub max_relu_contraction: f64,
}

pub fn sandwich_check(x: &RealMatrix, p: usize, delta: f64, trials: usize, seed: u64) -> Result<SandwichReport> {
    check_unit_columns(x)?;
    check_common(p, delta, trials)?;
    let pr = pairs(x.cols());
    let per_trial: Vec<(usize, usize, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<_> {
            let u = sample_projection(x.rows(), p, DistributionSpec::GaussianScaled, derive_seed(seed, t as u64))?;
            let lin = u.mat.tr_matmul(x)?;
            let g = relu_matrix(x, &u.mat)?;
            let (mut lo, mut hi, mut min_ratio, mut max_contr) = (0, 0, f64::INFINITY, 0.0f64);
            for &(i, j) in &pr {
                let d2 = squared_distance(x.col(i), x.col(j));
                let out = squared_distance(g.col(i), g.col(j));
                if out < 0.5 * d2 - delta {
                    lo += 1;
                }
                if out > d2 + delta {
                    hi += 1;
                }
                if d2 > 0.0 {
                    min_ratio = min_ratio.min((out / d2).sqrt());
                }
                let lin2 = squared_distance(lin.col(i), lin.col(j));
                if lin2 > 0.0 {
                    max_contr = max_contr.max((out / lin2).sqrt());
                }
            }
            Ok((lo, hi, min_ratio, max_contr))
        })
        .collect::<Result<_>>()?;
    let events = trials * pr.len();
    let lower: usize = per_trial.iter().map(|r| r.0).sum();
    let upper: usize = per_trial.iter().map(|r| r.1).sum();
    // The two violation kinds are disjoint.
    let failed = lower + upper;
    Ok(SandwichReport {
        p,
        delta,
        trials,
        events,
        pass_fraction: 1.0 - failed as f64 / events.max(1) as f64,
        lower_violations: lower,
        upper_violations: upper,
        min_lipschitz_ratio: per_trial.iter().map(|r| r.2).fold(f64::INFINITY, f64::min),
        max_relu_contraction: per_trial.iter().map(|r| r.3).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackReport {
    pub widths: Vec<usize>,
    pub delta: f64,
    /// `layers · δ`.
    pub slack: f64,
    pub trials: usize,
    pub events: usize,
    /// Within slack of the stated centre applied layer after layer.
    pub stated_pass_fraction: f64,
    /// Within slack of the arc-cosine expectation applied layer after layer.
    pub expected_pass_fraction: f64,
}

/// Propagates norms and squared distances through `layers` applications of
/// the chosen centre map. Returns the final squared distance matrix.
fn iterate_centers(x: &RealMatrix, layers: usize, expected: bool) -> Vec<Vec<f64>> {
    let n = x.cols();
    let mut gram: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| dot(x.col(i), x.col(j))).collect()).collect();
    for _ in 0..layers {
        let norms: Vec<f64> = (0..n).map(|i| gram[i][i].max(0.0).sqrt()).collect();
        let mut next = vec![vec![0.0; n]; n];
        for i in 0..n {
            next[i][i] = 0.5 * gram[i][i];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (a, b) = (norms[i], norms[j]);
                if a == 0.0 || b == 0.0 {
                    continue;
                }
                let t = (gram[i][j] / (a * b)).clamp(-1.0, 1.0).acos();
                next[i][j] = if expected {
                    a * b * (t.sin() + (PI - t) * t.cos()) / (2.0 * PI)
                } else {
                    // Inner product implied by ‖g_i‖² = ½a², ‖g_j‖² = ½b² and
                    // the stated squared distance.
                    let d2 = gram[i][i] + gram[j][j] - 2.0 * gram[i][j];
                    let dist = 0.5 * d2 + a * b * psi(t).expect("angle in range");
                    (0.5 * a * a + 0.5 * b * b - dist) / 2.0
                };
            }
        }
        gram = next;
    }
    (0..n).map(|i| (0..n).map(|j| gram[i][i] + gram[j][j] - 2.0 * gram[i][j]).collect()).collect()
}

/// Compares squared distances after a stack of ReLU layers with both
/// iterated centres, allowing `layers · δ`.
pub fn stack_distance_check(x: &RealMatrix, widths: &[usize], delta: f64, trials: usize, seed: u64) -> Result<StackReport> {
    check_unit_columns(x)?;
    check_common(widths.first().copied().unwrap_or(0), delta, trials)?;
    let stated = iterate_centers(x, widths.len(), false);
    let expected = iterate_centers(x, widths.len(), true);
    let slack = widths.len() as f64 * delta;
    let pr = pairs(x.cols());
    let per_trial: Vec<(usize, usize)> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<_> {
            let stack = LayerStack::sample(x.rows(), widths, derive_seed(seed, t as u64))?;
            let g = stack_forward_matrix(x, &stack)?;
            let (mut s, mut e) = (0, 0);
            for &(i, j) in &pr {
                let out = squared_distance(g.col(i), g.col(j));
                s += usize::from((out - stated[i][j]).abs() <= slack);
                e += usize::from((out - expected[i][j]).abs() <= slack);
            }
            Ok((s, e))
        })
        .collect::<Result<_>>()?;
    let events = (trials * pr.len()).max(1) as f64;
    Ok(StackReport {
        widths: widths.to_vec(),
        delta,
        slack,
        trials,
        events: trials * pr.len(),
        stated_pass_fraction: per_trial.iter().map(|r| r.0).sum::<usize>() as f64 / events,
        expected_pass_fraction: per_trial.iter().map(|r| r.1).sum::<usize>() as f64 / events,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRatioReport {
    pub p: usize,
    pub trials: usize,
    pub variance_p: f64,
    pub variance_4p: f64,
    /// `variance_p / variance_4p`; `1/p` scaling predicts 4.
    pub ratio: f64,
}

/// Variance of `‖g(Uᵀx) − g(Uᵀy)‖²` across layers of width `p` and `4p`.
pub fn variance_ratio(x: &[f64], y: &[f64], p: usize, trials: usize, seed: u64) -> Result<VarianceRatioReport> {
    if trials < 2 || p == 0 {
        return Err(invalid("need p >= 1 and at least two trials"));
    }
    if x.len() != y.len() {
        return Err(shape("points differ in dimension"));
    }
    let pair = RealMatrix::from_columns(&[x.to_vec(), y.to_vec()])?;
    let var_at = |width: usize, stream: u64| -> Result<f64> {
        let vals: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| -> Result<f64> {
                let g = trial_outputs(&pair, width, derive_seed(seed, stream), t)?;
                Ok(squared_distance(g.col(0), g.col(1)))
            })
            .collect::<Result<_>>()?;
        let mean = vals.iter().sum::<f64>() / trials as f64;
        Ok(vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64)
    };
    let (a, b) = (var_at(p, 0)?, var_at(4 * p, 1)?);
    Ok(VarianceRatioReport { p, trials, variance_p: a, variance_4p: b, ratio: a / b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::sphere_points;
    use proptest::prelude::*;

    #[test]
    fn psi_examples_and_shape() {
        assert_eq!(psi(0.0).unwrap(), 0.0);
        assert_eq!(psi(PI).unwrap(), 1.0);
        assert!((psi(PI / 2.0).unwrap() - 1.0 / PI).abs() < 1e-12);
        assert!((psi(PI / 2.0).unwrap() - 0.31831).abs() < 1e-5);
        assert!(psi(-0.1).is_err() && psi(3.2).is_err());
        let mut prev = -1.0;
        for k in 0..=10_000 {
            let v = psi(PI * k as f64 / 10_000.0).unwrap();
            assert!((0.0..=1.0).contains(&v) && v >= prev);
            prev = v;
        }
    }

    #[test]
    fn relu_layer_examples() {
        let u = ProjectionMatrix {
            mat: RealMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap(),
            dist: DistributionSpec::GaussianScaled,
            seed: 0,
        };
        assert_eq!(relu_layer(&[1.0, 1.0], &u).unwrap(), vec![1.0, 0.0]);
        assert_eq!(relu_layer(&[0.0, 0.0], &u).unwrap(), vec![0.0, 0.0]);
        assert!(relu_layer(&[1.0], &u).is_err());
        let u = sample_projection(5, 40, DistributionSpec::GaussianScaled, 3).unwrap();
        assert!(relu_layer(&[1.0, -2.0, 0.5, 0.0, 3.0], &u).unwrap().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn stack_composition() {
        let x = [0.3, -0.4, 1.2];
        let empty = LayerStack::sample(3, &[], 1).unwrap();
        assert_eq!(stack_forward(&x, &empty).unwrap(), x.to_vec());
        let one = LayerStack::sample(3, &[8], 1).unwrap();
        assert_eq!(stack_forward(&x, &one).unwrap(), relu_layer(&x, &one.layers[0]).unwrap());
        let a = sample_projection(3, 4, DistributionSpec::GaussianScaled, 1).unwrap();
        let b = sample_projection(5, 2, DistributionSpec::GaussianScaled, 1).unwrap();
        assert!(LayerStack::from_layers(vec![a, b], 0).is_err());
    }

    #[test]
    fn identical_points_have_zero_discrepancy() {
        let x = sphere_points(1, 8, 1).unwrap();
        let twice = RealMatrix::from_columns(&[x.col(0).to_vec(), x.col(0).to_vec()]).unwrap();
        let r = distance_preservation_check(&twice, 64, 0.1, 3, 2).unwrap();
        assert_eq!(r.pass_fraction, 1.0);
        assert!(r.first_trial[0].lhs_distance < 1e-15);
        let s = sandwich_check(&twice, 64, 0.1, 3, 2).unwrap();
        assert_eq!(s.pass_fraction, 1.0);
        let a = angle_preservation_check(&twice, 64, 0.05, 1.0, 3, 2).unwrap();
        assert!(a.max_discrepancy < 1e-12);
    }

    #[test]
    fn rejects_off_sphere_input() {
        let x = RealMatrix::from_columns(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(distance_preservation_check(&x, 16, 0.1, 2, 1).is_err());
        assert!(sandwich_check(&x, 16, 0.1, 2, 1).is_err());
        let y = sphere_points(3, 4, 1).unwrap();
        assert!(angle_preservation_check(&y, 16, 0.3, 0.7, 2, 1).is_err());
    }

    #[test]
    fn antipodal_and_orthogonal_pairs_follow_expected_center() {
        let anti = RealMatrix::from_columns(&[vec![1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0]]).unwrap();
        let r = distance_preservation_check(&anti, 4096, 0.1, 100, 3).unwrap();
        // Stated centre 3, arc-cosine expectation 1.
        assert!((stated_center(anti.col(0), anti.col(1)) - 3.0).abs() < 1e-12);
        assert!((expected_center(anti.col(0), anti.col(1)) - 1.0).abs() < 1e-12);
        assert!(r.expected_center_pass_fraction >= 0.95);
        assert_eq!(r.pass_fraction, 0.0);

        let orth = RealMatrix::from_columns(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((stated_center(orth.col(0), orth.col(1)) - (1.0 + 1.0 / PI)).abs() < 1e-12);
        assert!((expected_center(orth.col(0), orth.col(1)) - (1.0 - 1.0 / PI)).abs() < 1e-12);
        let r = distance_preservation_check(&orth, 4096, 0.1, 100, 4).unwrap();
        assert!(r.expected_center_pass_fraction >= 0.95);
    }

    #[test]
    fn expected_center_matches_angle_identity() {
        // cos θ' = cos θ + ψ holds exactly in expectation, so the angle check
        // passes even though the stated distance centre does not.
        let x = sphere_points(20, 64, 5).unwrap();
        let a = angle_preservation_check(&x, 4096, 0.05, 1.0, 5, 6).unwrap();
        assert!(a.pass_fraction >= 0.9, "{a:?}");
        let d = distance_preservation_check(&x, 4096, 0.1, 5, 7).unwrap();
        assert!(d.expected_center_pass_fraction >= 0.95, "{}", d.expected_center_pass_fraction);
    }

    #[test]
    fn relu_never_expands_linear_differences() {
        let x = sphere_points(15, 10, 8).unwrap();
        let s = sandwich_check(&x, 256, 0.1, 10, 9).unwrap();
        assert!(s.max_relu_contraction <= 1.0 + 1e-12);
        assert!(s.min_lipschitz_ratio > 0.0);
    }

    #[test]
    fn three_layer_stack_tracks_iterated_expectation() {
        let x = sphere_points(10, 32, 10).unwrap();
        let r = stack_distance_check(&x, &[4096, 4096, 4096], 0.1, 3, 11).unwrap();
        assert!(r.expected_pass_fraction >= 0.9, "{r:?}");
    }

    #[test]
    fn iterated_centres_reduce_to_single_layer_formulas() {
        let x = sphere_points(4, 6, 12).unwrap();
        let s = iterate_centers(&x, 1, false);
        let e = iterate_centers(&x, 1, true);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!((s[i][j] - stated_center(x.col(i), x.col(j))).abs() < 1e-12);
                    assert!((e[i][j] - expected_center(x.col(i), x.col(j))).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn variance_shrinks_like_one_over_p() {
        let x = sphere_points(2, 16, 13).unwrap();
        let r = variance_ratio(x.col(0), x.col(1), 256, 2000, 14).unwrap();
        assert!((2.5..=6.0).contains(&r.ratio), "{r:?}");
    }

    proptest! {
        #[test]
        fn relu_is_one_lipschitz(seed in any::<u64>(), d in 1usize..12, p in 1usize..40) {
            let u = sample_projection(d, p, DistributionSpec::GaussianScaled, seed).unwrap();
            let mut s = crate::random::Stream::new(seed, 99);
            let x = s.gaussian_vec(d);
            let y = s.gaussian_vec(d);
            let gx = relu_layer(&x, &u).unwrap();
            let gy = relu_layer(&y, &u).unwrap();
            let lx = u.mat.tr_matvec(&x).unwrap();
            let ly = u.mat.tr_matvec(&y).unwrap();
            prop_assert!(squared_distance(&gx, &gy) <= squared_distance(&lx, &ly) + 1e-12);
        }
    }
}
