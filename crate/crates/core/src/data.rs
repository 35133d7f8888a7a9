//! Synthetic datasets shared by the learners' experiments.

use crate::error::{invalid, Result};
use crate::linalg::RealMatrix;
use crate::random::Stream;

/// Two unit-variance Gaussian clusters centred at `±(separation/2)·e₁`.
/// Point `i` has label `i mod 2`.
pub fn two_clusters(n: usize, d: usize, separation: f64, seed: u64) -> Result<(RealMatrix, Vec<usize>)> {
    if n == 0 || d == 0 {
        return Err(invalid("two_clusters needs n, d >= 1"));
    }
    let mut stream = Stream::new(seed, 0);
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let mut data = Vec::with_capacity(n * d);
    for &l in &labels {
        let shift = if l == 0 { -separation / 2.0 } else { separation / 2.0 };
        for i in 0..d {
            data.push(stream.gaussian() + if i == 0 { shift } else { 0.0 });
        }
    }
    Ok((RealMatrix::from_col_major(d, n, data)?, labels))
}

/// `n` points drawn uniformly from the unit sphere in `R^d`.
pub fn sphere_points(n: usize, d: usize, seed: u64) -> Result<RealMatrix> {
    if n == 0 || d == 0 {
        return Err(invalid("sphere_points needs n, d >= 1"));
    }
    let mut stream = Stream::new(seed, 0);
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|_| loop {
            let v = stream.gaussian_vec(d);
            let norm = crate::linalg::norm2(&v);
            if norm > 1e-12 {
                break v.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect();
    RealMatrix::from_columns(&cols)
}

/// `n` standard Gaussian points in `R^d`; column `j` uses stream `j`.
pub fn gaussian_points(n: usize, d: usize, seed: u64) -> Result<RealMatrix> {
    if n == 0 || d == 0 {
        return Err(invalid("gaussian_points needs n, d >= 1"));
    }
    let cols: Vec<Vec<f64>> = (0..n).map(|j| Stream::new(seed, j as u64).gaussian_vec(d)).collect();
    RealMatrix::from_columns(&cols)
}

/// `A·B + noise·E` with `A` (`d × rank`), `B` (`rank × n`) and `E` all
/// standard Gaussian.
pub fn low_rank_plus_noise(d: usize, n: usize, rank: usize, noise: f64, seed: u64) -> Result<RealMatrix> {
    if rank == 0 || rank > d.min(n) {
        return Err(invalid(format!("rank {rank} outside [1, min(d, n)]")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(invalid(format!("noise level must be finite and nonnegative, got {noise}")));
    }
    let a = gaussian_points(rank, d, crate::random::derive_seed(seed, 0))?;
    let b = gaussian_points(n, rank, crate::random::derive_seed(seed, 1))?;
    let e = gaussian_points(n, d, crate::random::derive_seed(seed, 2))?;
    a.matmul(&b)?.add(&e.scale(noise))
}

/// `c × n` one-hot encoding.
pub fn one_hot(labels: &[usize], classes: usize) -> Result<RealMatrix> {
    if labels.is_empty() || classes == 0 {
        return Err(invalid("one_hot needs labels and at least one class"));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(invalid(format!("label {bad} out of range for {classes} classes")));
    }
    let mut m = vec![0.0; classes * labels.len()];
    for (j, &l) in labels.iter().enumerate() {
        m[j * classes + l] = 1.0;
    }
    RealMatrix::from_col_major(classes, labels.len(), m)
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Fraction of positions where the two label lists agree.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len().max(1) as f64
}
