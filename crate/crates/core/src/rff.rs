//! Random Fourier features for shift-invariant kernels.
//!
//! Feature vectors have length `2p`: the `p` cosines first, then the `p`
//! sines, all scaled by `1/√p`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Result};
use crate::linalg::{dot, RealMatrix};
use crate::random::{derive_seed, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelSpec {
    /// `exp(−‖Δ‖²/(2σ²))`.
    Gaussian { sigma: f64 },
    /// `exp(−‖Δ‖₁/σ)`.
    Laplacian { sigma: f64 },
}

impl KernelSpec {
    pub fn from_name(name: &str, sigma: f64) -> Result<Self> {
        let k = match name {
            "gaussian" | "rbf" => Self::Gaussian { sigma },
            "laplacian" => Self::Laplacian { sigma },
            other => return Err(invalid(format!("unknown kernel '{other}'"))),
        };
        k.validate()?;
        Ok(k)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::Laplacian { .. } => "laplacian",
        }
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            Self::Gaussian { sigma } | Self::Laplacian { sigma } => sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.sigma();
        if !(s.is_finite() && s > 0.0) {
            return Err(invalid(format!("kernel bandwidth must be positive, got {s}")));
        }
        Ok(())
    }

    /// `E[uᵀu]` under the spectral density; infinite for the Cauchy case.
    pub fn spectral_second_moment(&self, d: usize) -> Option<f64> {
        match *self {
            Self::Gaussian { sigma } => Some(d as f64 / (sigma * sigma)),
            Self::Laplacian { .. } => None,
        }
    }

    fn draw(&self, stream: &mut Stream) -> f64 {
        match *self {
            Self::Gaussian { sigma } => stream.gaussian() / sigma,
            Self::Laplacian { sigma } => stream.cauchy() / sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    /// `d × p`, one frequency per column.
    pub frequencies: RealMatrix,
    pub kernel: KernelSpec,
    pub seed: u64,
}

impl FeatureMap {
    pub fn from_frequencies(kernel: KernelSpec, frequencies: RealMatrix) -> Result<Self> {
        kernel.validate()?;
        Ok(Self { frequencies, kernel, seed: 0 })
    }

    pub fn d(&self) -> usize {
        self.frequencies.rows()
    }

    pub fn p(&self) -> usize {
        self.frequencies.cols()
    }
}

/// Draws `p` frequencies from the kernel's spectral density; column `t` uses
/// stream `t` of `seed`.
pub fn sample_spectral(kernel: KernelSpec, d: usize, p: usize, seed: u64) -> Result<FeatureMap> {
    kernel.validate()?;
    if d == 0 || p == 0 {
        return Err(invalid(format!("feature map dims must be positive, got d = {d}, p = {p}")));
    }
    let mut data = Vec::with_capacity(d * p);
    for t in 0..p {
        let mut stream = Stream::new(seed, t as u64);
        data.extend((0..d).map(|_| kernel.draw(&mut stream)));
    }
    Ok(FeatureMap { frequencies: RealMatrix::from_col_major(d, p, data)?, kernel, seed })
}

/// `z(x) = (1/√p)[cos(u_tᵀx)…, sin(u_tᵀx)…]`.
pub fn feature_map(x: &[f64], fm: &FeatureMap) -> Result<Vec<f64>> {
    if x.len() != fm.d() {
        return Err(shape(format!("input has {} entries, feature map expects {}", x.len(), fm.d())));
    }
    let p = fm.p();
    let scale = 1.0 / (p as f64).sqrt();
    let mut z = vec![0.0; 2 * p];
    for (t, u) in fm.frequencies.columns().enumerate() {
        let (s, c) = dot(u, x).sin_cos();
        z[t] = scale * c;
        z[p + t] = scale * s;
    }
    Ok(z)
}

/// Features of every column of `x`, as a `2p × n` matrix.
pub fn feature_matrix(x: &RealMatrix, fm: &FeatureMap) -> Result<RealMatrix> {
    if x.rows() != fm.d() {
        return Err(shape(format!("data has {} rows, feature map expects {}", x.rows(), fm.d())));
    }
    let cols: Vec<Vec<f64>> = (0..x.cols()).into_par_iter().map(|j| feature_map(x.col(j), fm)).collect::<Result<_>>()?;
    RealMatrix::from_columns(&cols)
}

/// `z(x)ᵀz(y)`.
pub fn approx_kernel(zx: &[f64], zy: &[f64]) -> Result<f64> {
    if zx.len() != zy.len() {
        return Err(shape(format!("feature lengths differ: {} vs {}", zx.len(), zy.len())));
    }
    Ok(dot(zx, zy))
}

/// Approximate Gram matrix of the feature columns of `z`. The diagonal is set
/// to 1, which `cos² + sin² = 1` guarantees, and the off-diagonal part is
/// computed once and mirrored.
pub fn approx_kernel_matrix(z: &RealMatrix) -> RealMatrix {
    let n = z.cols();
    let mut data = vec![0.0; n * n];
    for j in 0..n {
        data[j * n + j] = 1.0;
        for i in 0..j {
            let v = dot(z.col(i), z.col(j));
            data[j * n + i] = v;
            data[i * n + j] = v;
        }
    }
    RealMatrix::from_col_major(n, n, data).expect("inner products of finite features are finite")
}

pub fn exact_kernel(kernel: KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    kernel.validate()?;
    if x.len() != y.len() {
        return Err(shape(format!("inputs differ in length: {} vs {}", x.len(), y.len())));
    }
    Ok(match kernel {
        KernelSpec::Gaussian { sigma } => {
            let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            (-sq / (2.0 * sigma * sigma)).exp()
        }
        KernelSpec::Laplacian { sigma } => {
            let l1: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
            (-l1 / sigma).exp()
        }
    })
}

/// `2·exp(−pε²/2)`.
pub fn hoeffding_bound(p: usize, epsilon: f64) -> f64 {
    2.0 * (-(p as f64) * epsilon * epsilon / 2.0).exp()
}

/// Sup-error tail bound over a set of diameter `diam`, using `σ² = E[uᵀu]`;
/// `None` when that moment is infinite.
pub fn sup_error_bound(kernel: KernelSpec, d: usize, diam: f64, p: usize, epsilon: f64) -> Option<f64> {
    let sigma = kernel.spectral_second_moment(d)?.sqrt();
    Some(256.0 * (sigma * diam / epsilon).powi(2) * (-(p as f64) * epsilon * epsilon / (4.0 * (d as f64 + 2.0))).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingReport {
    pub p: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub exact: f64,
    pub empirical_prob: f64,
    pub std_error: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Fixes a random pair (entries `N(0, σ²/d)`) and counts how often a fresh
/// feature map misses the exact kernel by at least `ε`.
pub fn hoeffding_check(
    kernel: KernelSpec,
    d: usize,
    p: usize,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<HoeffdingReport> {
    if trials < 1000 {
        return Err(invalid(format!("need at least 1000 trials, got {trials}")));
    }
    if !(epsilon >= 0.0) {
        return Err(invalid(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    kernel.validate()?;
    let (x, y) = random_pair(kernel, d, &mut Stream::new(seed, u64::MAX));
    let exact = exact_kernel(kernel, &x, &y)?;
    let hits: usize = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<usize> {
            let fm = sample_spectral(kernel, d, p, derive_seed(seed, t as u64))?;
            let approx = approx_kernel(&feature_map(&x, &fm)?, &feature_map(&y, &fm)?)?;
            Ok(usize::from((approx - exact).abs() >= epsilon))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    let prob = hits as f64 / trials as f64;
    let std_error = (prob * (1.0 - prob) / trials as f64).sqrt();
    let bound = hoeffding_bound(p, epsilon);
    Ok(HoeffdingReport {
        p,
        epsilon,
        trials,
        exact,
        empirical_prob: prob,
        std_error,
        bound,
        holds: prob <= bound + 3.0 * std_error,
    })
}

fn random_pair(kernel: KernelSpec, d: usize, stream: &mut Stream) -> (Vec<f64>, Vec<f64>) {
    let sd = kernel.sigma() / (d as f64).sqrt();
    let x = (0..d).map(|_| sd * stream.gaussian()).collect();
    let y = (0..d).map(|_| sd * stream.gaussian()).collect();
    (x, y)
}

/// Largest kernel error over all pairs of columns of `x`: a lower estimate
/// of the sup over any set containing them.
pub fn sup_error_estimate(kernel: KernelSpec, x: &RealMatrix, p: usize, seed: u64) -> Result<f64> {
    if x.cols() < 2 {
        return Err(invalid("need at least two points"));
    }
    let fm = sample_spectral(kernel, x.rows(), p, seed)?;
    let z = feature_matrix(x, &fm)?;
    let n = x.cols();
    let worst = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut w = 0.0f64;
            for i in 0..j {
                let exact = exact_kernel(kernel, x.col(i), x.col(j)).expect("validated shapes");
                w = w.max((dot(z.col(i), z.col(j)) - exact).abs());
            }
            w
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnbiasednessReport {
    pub p: usize,
    pub resamples: usize,
    pub pairs: usize,
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
}

/// Averages `z(x)ᵀz(y)` over independent feature maps for several random
/// pairs and compares each average with the exact kernel.
pub fn unbiasedness_check(
    kernel: KernelSpec,
    d: usize,
    p: usize,
    resamples: usize,
    pairs: usize,
    seed: u64,
) -> Result<UnbiasednessReport> {
    if resamples == 0 || pairs == 0 {
        return Err(invalid("resamples and pairs must be positive"));
    }
    let mut stream = Stream::new(seed, u64::MAX);
    let points: Vec<_> = (0..pairs).map(|_| random_pair(kernel, d, &mut stream)).collect();
    let sums = (0..resamples)
        .into_par_iter()
        .map(|t| -> Result<Vec<f64>> {
            let fm = sample_spectral(kernel, d, p, derive_seed(seed, t as u64))?;
            points.iter().map(|(x, y)| approx_kernel(&feature_map(x, &fm)?, &feature_map(y, &fm)?)).collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut errors = Vec::with_capacity(pairs);
    for (i, (x, y)) in points.iter().enumerate() {
        let mean = sums.iter().map(|s| s[i]).sum::<f64>() / resamples as f64;
        errors.push((mean - exact_kernel(kernel, x, y)?).abs());
    }
    Ok(UnbiasednessReport {
        p,
        resamples,
        pairs,
        max_abs_error: errors.iter().copied().fold(0.0, f64::max),
        mean_abs_error: errors.iter().sum::<f64>() / pairs as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub p: usize,
    pub seeds: usize,
    pub mean_sup_error_p: f64,
    pub mean_sup_error_4p: f64,
    /// `mean_sup_error_4p / mean_sup_error_p`; `1/√p` decay predicts 0.5.
    pub ratio: f64,
}

/// Compares the sup-error estimate at `p` and `4p` features, averaged over
/// `seeds` independent maps of each size.
pub fn rate_check(kernel: KernelSpec, x: &RealMatrix, p: usize, seeds: usize, seed: u64) -> Result<RateReport> {
    if seeds == 0 {
        return Err(invalid("need at least one seed"));
    }
    let mut small = 0.0;
    let mut large = 0.0;
    for s in 0..seeds as u64 {
        small += sup_error_estimate(kernel, x, p, derive_seed(seed, 2 * s))?;
        large += sup_error_estimate(kernel, x, 4 * p, derive_seed(seed, 2 * s + 1))?;
    }
    let (small, large) = (small / seeds as f64, large / seeds as f64);
    Ok(RateReport { p, seeds, mean_sup_error_p: small, mean_sup_error_4p: large, ratio: large / small })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, LN_2};

    const G1: KernelSpec = KernelSpec::Gaussian { sigma: 1.0 };

    fn points(d: usize, n: usize, seed: u64) -> RealMatrix {
        let mut s = Stream::new(seed, 0);
        RealMatrix::from_fn(d, n, |_, _| s.gaussian())
    }

    #[test]
    fn spectral_moments() {
        let fm = sample_spectral(G1, 1, 10_000, 3).unwrap();
        let u = fm.frequencies.as_slice();
        let mean = u.iter().sum::<f64>() / u.len() as f64;
        let var = u.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / u.len() as f64;
        assert!((var - 1.0).abs() < 0.05, "{var}");

        let sigma = 2.0;
        let fm = sample_spectral(KernelSpec::Laplacian { sigma }, 1, 10_000, 4).unwrap();
        let mut abs: Vec<f64> = fm.frequencies.as_slice().iter().map(|v| v.abs()).collect();
        abs.sort_by(f64::total_cmp);
        let median = abs[abs.len() / 2];
        assert!((median * sigma - 1.0).abs() < 0.05, "{median}");

        assert_eq!(sample_spectral(G1, 3, 5, 9).unwrap(), sample_spectral(G1, 3, 5, 9).unwrap());
        assert!(sample_spectral(KernelSpec::Gaussian { sigma: 0.0 }, 3, 5, 9).is_err());
        assert!(sample_spectral(KernelSpec::Laplacian { sigma: -1.0 }, 3, 5, 9).is_err());
    }

    #[test]
    fn single_frequency_examples() {
        let zero = FeatureMap::from_frequencies(G1, RealMatrix::zeros(3, 1)).unwrap();
        let z = feature_map(&[0.3, -2.0, 5.0], &zero).unwrap();
        assert_eq!(z, vec![1.0, 0.0]);
        assert_eq!(approx_kernel(&z, &z).unwrap(), 1.0);

        let u = FeatureMap::from_frequencies(G1, RealMatrix::from_col_major(2, 1, vec![1.0, 0.0]).unwrap()).unwrap();
        let z = feature_map(&[FRAC_PI_2, 7.0], &u).unwrap();
        assert!(z[0].abs() < 1e-15 && (z[1] - 1.0).abs() < 1e-15);
        assert!(feature_map(&[1.0], &u).is_err());
    }

    #[test]
    fn one_frequency_gives_cosine_of_difference() {
        let mut s = Stream::new(8, 0);
        for t in 0..200 {
            let fm = sample_spectral(G1, 4, 1, t).unwrap();
            let x = s.gaussian_vec(4);
            let y = s.gaussian_vec(4);
            let approx = approx_kernel(&feature_map(&x, &fm).unwrap(), &feature_map(&y, &fm).unwrap()).unwrap();
            let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            assert!((approx - dot(fm.frequencies.col(0), &diff).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn features_have_unit_norm_and_bounded_products() {
        let fm = sample_spectral(KernelSpec::Laplacian { sigma: 0.7 }, 5, 64, 1).unwrap();
        let x = points(5, 30, 2);
        let z = feature_matrix(&x, &fm).unwrap();
        for j in 0..30 {
            assert!((dot(z.col(j), z.col(j)) - 1.0).abs() < 1e-12);
        }
        let k = approx_kernel_matrix(&z);
        for i in 0..30 {
            assert_eq!(k.get(i, i), 1.0);
            for j in 0..30 {
                assert_eq!(k.get(i, j), k.get(j, i));
                assert!(k.get(i, j).abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn exact_kernel_examples() {
        let x = [0.4, -1.0];
        assert_eq!(exact_kernel(G1, &x, &x).unwrap(), 1.0);
        let sigma = 1.5;
        // ‖x − y‖² = 2σ².
        let y = [0.4 + sigma * 2f64.sqrt(), -1.0];
        let g = exact_kernel(KernelSpec::Gaussian { sigma }, &x, &y).unwrap();
        assert!((g - (-1.0f64).exp()).abs() < 1e-12);
        assert!((g - 0.367879).abs() < 1e-6);
        let y = [0.4 + LN_2 / 2.0, -1.0 - LN_2 / 2.0];
        let l = exact_kernel(KernelSpec::Laplacian { sigma: 1.0 }, &x, &y).unwrap();
        assert!((l - 0.5).abs() < 1e-12);
        assert!(exact_kernel(G1, &x, &[1.0]).is_err());
    }

    #[test]
    fn hoeffding_examples() {
        assert!((hoeffding_bound(200, 0.2) - 2.0 * (-4.0f64).exp()).abs() < 1e-15);
        let r = hoeffding_check(G1, 8, 50, 2.0, 1000, 1).unwrap();
        assert_eq!(r.empirical_prob, 0.0);
        let r = hoeffding_check(G1, 8, 200, 0.2, 10_000, 2).unwrap();
        assert!(r.holds, "{r:?}");
        assert!(hoeffding_check(G1, 8, 200, 0.2, 999, 2).is_err());
    }

    #[test]
    fn sup_error_examples() {
        let x = points(4, 50, 5);
        let e = sup_error_estimate(G1, &x, 1 << 14, 6).unwrap();
        assert!((0.0..=0.05).contains(&e), "{e}");
        let same = RealMatrix::from_columns(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert!(sup_error_estimate(G1, &same, 10, 1).unwrap() < 1e-15);
        assert!(sup_error_estimate(G1, &points(3, 1, 1), 10, 1).is_err());
    }

    #[test]
    fn unbiased_on_average() {
        for kernel in [G1, KernelSpec::Laplacian { sigma: 1.0 }] {
            let r = unbiasedness_check(kernel, 3, 32, 10_000, 20, 7).unwrap();
            assert!(r.max_abs_error <= 0.01, "{kernel:?}: {r:?}");
        }
    }

    #[test]
    fn error_decays_with_more_features() {
        let x = points(4, 50, 10);
        let r = rate_check(G1, &x, 64, 10, 11).unwrap();
        assert!(r.ratio <= 0.7, "{r:?}");
    }

    #[test]
    fn sup_bound_is_informative_only_for_gaussian() {
        assert!(sup_error_bound(KernelSpec::Laplacian { sigma: 1.0 }, 3, 1.0, 100, 0.1).is_none());
        let b = sup_error_bound(G1, 2, 1.0, 100, 0.5).unwrap();
        assert!((b - 256.0 * 8.0 * (-100.0f64 * 0.25 / 16.0).exp()).abs() < 1e-9);
    }
}
