//! Seeded random streams and projection-matrix samplers.
//!
//! Every random draw in the toolkit comes from a [`Stream`]: a Xoshiro256++
//! generator whose 256-bit state is expanded by SplitMix64 from a key derived
//! from `(seed, stream id)`. Matrix samplers give column `t` its own stream
//! `t`, so entries never depend on the order columns are generated in.
//!
//! Conversions are fixed so results are reproducible bit for bit:
//! * uniform `[0, 1)`: top 53 bits of a `u64` times 2⁻⁵³;
//! * Gaussian: Box-Muller, `r = sqrt(-2 ln u1)` with `u1 ∈ (0, 1]`, emitting
//!   `r cos(2π u2)` then `r sin(2π u2)`;
//! * Bernoulli(ξ): `uniform() < ξ`.

use rand::RngCore;
use rand_xoshiro::rand_core::{impls, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{BitVector, RealMatrix};

/// Mixes a stream id into a seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let key = SplitMix64::seed_from_u64(seed).next_u64();
    SplitMix64::seed_from_u64(key ^ stream.rotate_left(29)).next_u64()
}

/// Deterministic random stream keyed by `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct Stream {
    rng: Xoshiro256PlusPlus,
    spare: Option<f64>,
}

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { rng: Xoshiro256PlusPlus::seed_from_u64(derive_seed(seed, stream)), spare: None }
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    /// Standard Cauchy via the inverse CDF.
    pub fn cauchy(&mut self) -> f64 {
        loop {
            let u = self.uniform();
            if u != 0.0 {
                return (std::f64::consts::PI * (u - 0.5)).tan();
            }
        }
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// ±1 with equal probability.
    #[inline]
    pub fn sign(&mut self) -> f64 {
        if self.rng.next_u64() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        use rand::Rng;
        self.gen_range(0..n)
    }

    /// `k` distinct indices from `[0, n)`, in sampling order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        rand::seq::index::sample(self, n, k).into_vec()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(self);
    }

    /// Vector of i.i.d. standard normals.
    pub fn gaussian_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.gaussian()).collect()
    }
}

impl RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        impls::fill_bytes_via_next(self, dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

/// Entry distribution of a random projection matrix with `p` columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DistributionSpec {
    /// N(0, 1).
    GaussianUnit,
    /// N(0, 1/p).
    GaussianScaled,
    /// ±1/√p with equal probability.
    Rademacher,
    /// √(3/p)·{+1 w.p. 1/6, 0 w.p. 2/3, −1 w.p. 1/6}.
    AchlioptasSparse,
    /// 1 with probability ξ, else 0.
    BernoulliBinary { xi: f64 },
}

impl DistributionSpec {
    /// Parses a CLI distribution name. `binary` needs `xi`.
    pub fn from_name(name: &str, xi: Option<f64>) -> Result<Self> {
        match name {
            "gaussian" => Ok(Self::GaussianScaled),
            "gaussian-unit" => Ok(Self::GaussianUnit),
            "rademacher" => Ok(Self::Rademacher),
            "sparse" => Ok(Self::AchlioptasSparse),
            "binary" => {
                let xi = xi.ok_or_else(|| invalid("binary distribution needs xi"))?;
                check_xi(xi)?;
                Ok(Self::BernoulliBinary { xi })
            }
            other => Err(invalid(format!("unknown distribution {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::GaussianUnit => "gaussian-unit",
            Self::GaussianScaled => "gaussian",
            Self::Rademacher => "rademacher",
            Self::AchlioptasSparse => "sparse",
            Self::BernoulliBinary { .. } => "binary",
        }
    }

    fn sample(&self, stream: &mut Stream, p: usize) -> f64 {
        let inv_sqrt_p = 1.0 / (p as f64).sqrt();
        match *self {
            Self::GaussianUnit => stream.gaussian(),
            Self::GaussianScaled => stream.gaussian() * inv_sqrt_p,
            Self::Rademacher => stream.sign() * inv_sqrt_p,
            Self::AchlioptasSparse => {
                let u = stream.uniform();
                let v = if u < 1.0 / 6.0 {
                    1.0
                } else if u < 1.0 / 3.0 {
                    -1.0
                } else {
                    0.0
                };
                v * 3f64.sqrt() * inv_sqrt_p
            }
            Self::BernoulliBinary { xi } => f64::from(u8::from(stream.bernoulli(xi))),
        }
    }
}

fn check_xi(xi: f64) -> Result<()> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(invalid(format!("xi must lie in (0, 1), got {xi}")));
    }
    Ok(())
}

/// A `d × p` real random matrix with the recipe that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionMatrix {
    pub mat: RealMatrix,
    pub dist: DistributionSpec,
    pub seed: u64,
}

impl ProjectionMatrix {
    pub fn d(&self) -> usize {
        self.mat.rows()
    }

    pub fn p(&self) -> usize {
        self.mat.cols()
    }
}

/// Samples a real-valued `d × p` projection matrix.
pub fn sample_projection(
    d: usize,
    p: usize,
    dist: DistributionSpec,
    seed: u64,
) -> Result<ProjectionMatrix> {
    if d == 0 || p == 0 {
        return Err(invalid(format!("projection dims must be positive, got {d}x{p}")));
    }
    if matches!(dist, DistributionSpec::BernoulliBinary { .. }) {
        return Err(invalid("binary entries need sample_hypercube_matrix"));
    }
    let mut data = Vec::with_capacity(d * p);
    for t in 0..p {
        let mut stream = Stream::new(seed, t as u64);
        data.extend((0..d).map(|_| dist.sample(&mut stream, p)));
    }
    Ok(ProjectionMatrix { mat: RealMatrix::from_col_major(d, p, data)?, dist, seed })
}

/// A `d × p` binary projection matrix stored as packed columns.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryProjection {
    columns: Vec<BitVector>,
    d: usize,
    pub xi: f64,
    pub seed: u64,
}

impl BinaryProjection {
    pub fn from_columns(columns: Vec<BitVector>, xi: f64, seed: u64) -> Result<Self> {
        let d = columns.first().map(BitVector::len).unwrap_or(0);
        if d == 0 || columns.iter().any(|c| c.len() != d) {
            return Err(invalid("binary projection columns must share a positive length"));
        }
        Ok(Self { columns, d, xi, seed })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[BitVector] {
        &self.columns
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.columns[col].get(row)
    }

    pub fn count_ones(&self) -> usize {
        self.columns.iter().map(BitVector::count_ones).sum()
    }
}

/// Samples a `d × p` matrix of i.i.d. Bernoulli(ξ) bits.
pub fn sample_hypercube_matrix(d: usize, p: usize, xi: f64, seed: u64) -> Result<BinaryProjection> {
    if d == 0 || p == 0 {
        return Err(invalid(format!("projection dims must be positive, got {d}x{p}")));
    }
    check_xi(xi)?;
    let columns = (0..p)
        .map(|t| {
            let mut stream = Stream::new(seed, t as u64);
            let mut col = BitVector::zeros(d);
            for j in 0..d {
                if stream.bernoulli(xi) {
                    col.set(j, true);
                }
            }
            col
        })
        .collect();
    BinaryProjection::from_columns(columns, xi, seed)
}

/// Diagonal of a random sign-flip matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignVector {
    pub signs: Vec<f64>,
    pub seed: u64,
}

impl SignVector {
    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }
}

pub fn sample_sign_diagonal(d: usize, seed: u64) -> Result<SignVector> {
    if d == 0 {
        return Err(invalid("sign diagonal needs d >= 1"));
    }
    let mut stream = Stream::new(seed, 0);
    Ok(SignVector { signs: (0..d).map(|_| stream.sign()).collect(), seed })
}
