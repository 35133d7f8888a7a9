//! Mod-2 binary projection onto hypercubes, the approximate nearest-neighbor
//! index built on it, and a Monte Carlo check of the three distance regimes.
//!
//! A level with block length `ℓ` uses `ξ = ε²/ℓ` and certifies radius `ℓ/4`:
//! a stored point whose code lies within `(1+ε)·p·ξ·ℓ/4` of the query code is
//! a candidate, and a candidate is returned only if its true Hamming distance
//! is at most `(1+ε)·ℓ/4`.

use std::io::{Read, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Error, Result};
use crate::linalg::{hamming_distance, hamming_unchecked, BitVector, RealMatrix};
use crate::random::{derive_seed, sample_hypercube_matrix, BinaryProjection, Stream};

const MAGIC: &[u8; 5] = b"HCUB1";

/// Number of quantile thresholds used when none are supplied.
pub const DEFAULT_THRESHOLD_COUNT: usize = 15;

/// `f(x) = Uᵀx mod 2`.
pub fn project_binary(x: &BitVector, u: &BinaryProjection) -> Result<BitVector> {
    if x.len() != u.d() {
        return Err(shape(format!("vector has {} bits, projection expects {}", x.len(), u.d())));
    }
    Ok(project_unchecked(x, u))
}

fn project_unchecked(x: &BitVector, u: &BinaryProjection) -> BitVector {
    let mut out = BitVector::zeros(u.p());
    for (t, col) in u.columns().iter().enumerate() {
        if col.dot_mod2(x) {
            out.set(t, true);
        }
    }
    out
}

/// Thermometer code: bit `i·T + t` is `x_i > thresholds[t]` (ties give 0).
pub fn quantize(x: &[f64], thresholds: &[f64]) -> Result<BitVector> {
    check_thresholds(thresholds)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let t = thresholds.len();
    let mut out = BitVector::zeros(x.len() * t);
    for (i, &v) in x.iter().enumerate() {
        // Thresholds are sorted, so the set bits form a prefix.
        let above = thresholds.partition_point(|&th| v > th);
        for k in 0..above {
            out.set(i * t + k, true);
        }
    }
    Ok(out)
}

/// Quantizes every column of `x`.
pub fn quantize_columns(x: &RealMatrix, thresholds: &[f64]) -> Result<Vec<BitVector>> {
    x.columns().map(|c| quantize(c, thresholds)).collect()
}

fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(invalid("quantization needs at least one threshold"));
    }
    if thresholds.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("thresholds must be sorted ascending"));
    }
    Ok(())
}

/// `count` equally spaced quantiles (levels `k/(count+1)`) of all entries of
/// `x`, with linear interpolation between order statistics.
pub fn default_thresholds(x: &RealMatrix, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(invalid("threshold count must be positive"));
    }
    let mut values = x.as_slice().to_vec();
    values.sort_by(f64::total_cmp);
    let last = (values.len() - 1) as f64;
    Ok((1..=count)
        .map(|k| {
            let pos = last * k as f64 / (count + 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            values[lo] + (pos - lo as f64) * (values[hi] - values[lo])
        })
        .collect())
}

/// `p = ceil(8 · ln n / ε²)`, at least 1 (so a single stored point still
/// gets a code).
pub fn code_length(n: usize, epsilon: f64) -> usize {
    ((8.0 * (n.max(2) as f64).ln() / (epsilon * epsilon)).ceil() as usize).max(1)
}

/// Block lengths `1, 2, 4, …` below `d`, then `d`.
pub fn level_schedule(d: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut ell = 1;
    while ell < d {
        out.push(ell);
        ell *= 2;
    }
    out.push(d);
    out
}

#[derive(Debug, Clone)]
pub struct HypercubeLevel {
    pub ell: usize,
    pub xi: f64,
    pub seeds: Vec<u64>,
    pub projections: Vec<BinaryProjection>,
    /// `codes[k][i]` is point `i` under projection `k`.
    pub codes: Vec<Vec<BitVector>>,
}

impl HypercubeLevel {
    /// Radius this level certifies, `ℓ/4`.
    pub fn radius(&self) -> f64 {
        self.ell as f64 / 4.0
    }
}

#[derive(Debug)]
pub struct HypercubeIndex {
    d: usize,
    epsilon: f64,
    p: usize,
    k: usize,
    seed: u64,
    dataset: Vec<BitVector>,
    levels: Vec<HypercubeLevel>,
    thresholds: Option<Vec<f64>>,
    counter: AtomicU64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub found: bool,
    pub index: Option<usize>,
    /// `ℓ/4` of the level that accepted the answer.
    pub certified_radius: Option<f64>,
    /// Verified Hamming distance to the answer.
    pub distance: Option<usize>,
    /// Which of the K projections was used at each level.
    pub projection: usize,
    pub candidates_checked: usize,
}

/// Builds the index with `p = code_length(n, ε)`.
pub fn build_index(dataset: Vec<BitVector>, epsilon: f64, k: usize, seed: u64) -> Result<HypercubeIndex> {
    let p = code_length(dataset.len(), epsilon);
    build_index_with_p(dataset, epsilon, k, p, seed)
}

pub fn build_index_with_p(
    dataset: Vec<BitVector>,
    epsilon: f64,
    k: usize,
    p: usize,
    seed: u64,
) -> Result<HypercubeIndex> {
    if dataset.is_empty() {
        return Err(invalid("cannot index an empty dataset"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if k == 0 || p == 0 {
        return Err(invalid("K and p must be positive"));
    }
    let d = dataset[0].len();
    if d == 0 {
        return Err(invalid("points must have at least one bit"));
    }
    if let Some(bad) = dataset.iter().position(|x| x.len() != d) {
        return Err(shape(format!("point {bad} has {} bits, expected {d}", dataset[bad].len())));
    }
    let schedule = level_schedule(d);
    let seeds: Vec<Vec<u64>> = (0..schedule.len())
        .map(|li| (0..k).map(|j| derive_seed(seed, (li * k + j) as u64)).collect())
        .collect();
    let levels = assemble_levels(&dataset, epsilon, p, &schedule, seeds)?;
    Ok(HypercubeIndex { d, epsilon, p, k, seed, dataset, levels, thresholds: None, counter: AtomicU64::new(0) })
}

fn assemble_levels(
    dataset: &[BitVector],
    epsilon: f64,
    p: usize,
    schedule: &[usize],
    seeds: Vec<Vec<u64>>,
) -> Result<Vec<HypercubeLevel>> {
    let d = dataset[0].len();
    schedule
        .iter()
        .zip(seeds)
        .map(|(&ell, seeds)| {
            let xi = epsilon * epsilon / ell as f64;
            let projections = seeds
                .par_iter()
                .map(|&s| sample_hypercube_matrix(d, p, xi, s))
                .collect::<Result<Vec<_>>>()?;
            let codes = projections
                .par_iter()
                .map(|u| dataset.iter().map(|x| project_unchecked(x, u)).collect())
                .collect();
            Ok(HypercubeLevel { ell, xi, seeds, projections, codes })
        })
        .collect()
}

impl HypercubeIndex {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.dataset.len()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dataset(&self) -> &[BitVector] {
        &self.dataset
    }

    pub fn levels(&self) -> &[HypercubeLevel] {
        &self.levels
    }

    pub fn thresholds(&self) -> Option<&[f64]> {
        self.thresholds.as_deref()
    }

    /// Attaches the quantization thresholds used to binarize real data, so
    /// real-valued queries can be encoded the same way.
    pub fn set_thresholds(&mut self, thresholds: Vec<f64>) -> Result<()> {
        check_thresholds(&thresholds)?;
        self.thresholds = Some(thresholds);
        Ok(())
    }

    /// Total stored code bits: `levels · K · n · p`.
    pub fn code_bits(&self) -> usize {
        self.levels.iter().map(|l| l.codes.iter().map(|c| c.len() * self.p).sum::<usize>()).sum()
    }

    /// Scans levels in ascending `ℓ` using projection `counter mod K` and
    /// returns the first candidate whose true distance is within `(1+ε)·ℓ/4`.
    pub fn query(&self, q: &BitVector) -> Result<QueryResult> {
        let choice = (self.counter.fetch_add(1, Ordering::Relaxed) % self.k as u64) as usize;
        self.query_with_projection(q, choice)
    }

    pub fn query_with_projection(&self, q: &BitVector, choice: usize) -> Result<QueryResult> {
        if q.len() != self.d {
            return Err(shape(format!("query has {} bits, index expects {}", q.len(), self.d)));
        }
        if choice >= self.k {
            return Err(invalid(format!("projection {choice} out of range (K = {})", self.k)));
        }
        let eps = self.epsilon;
        let mut checked = 0;
        for level in &self.levels {
            let code = project_unchecked(q, &level.projections[choice]);
            let threshold = (1.0 + eps) * self.p as f64 * level.xi * level.ell as f64 / 4.0;
            let mut candidates: Vec<(usize, usize)> = level.codes[choice]
                .iter()
                .enumerate()
                .map(|(i, c)| (hamming_unchecked(&code, c), i))
                .filter(|&(dist, _)| (dist as f64) < threshold)
                .collect();
            candidates.sort_unstable();
            let accept = (1.0 + eps) * level.radius();
            for (_, i) in candidates {
                checked += 1;
                let dist = hamming_unchecked(q, &self.dataset[i]);
                if dist as f64 <= accept {
                    return Ok(QueryResult {
                        found: true,
                        index: Some(i),
                        certified_radius: Some(level.radius()),
                        distance: Some(dist),
                        projection: choice,
                        candidates_checked: checked,
                    });
                }
            }
        }
        Ok(QueryResult {
            found: false,
            index: None,
            certified_radius: None,
            distance: None,
            projection: choice,
            candidates_checked: checked,
        })
    }

    /// Binary layout, all integers little-endian u64:
    ///
    /// ```text
    /// "HCUB1"
    /// d, n, ε (f64 bits), level count, K, p, seed
    /// dataset: n × ceil(d/64) words
    /// per level: ℓ, K seeds, then K × n × ceil(p/64) code words
    /// threshold count (0 = none), then that many f64 bit patterns
    /// ```
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        let header = [
            self.d as u64,
            self.n() as u64,
            self.epsilon.to_bits(),
            self.levels.len() as u64,
            self.k as u64,
            self.p as u64,
            self.seed,
        ];
        for v in header {
            put(&mut w, v)?;
        }
        for x in &self.dataset {
            put_words(&mut w, x.words())?;
        }
        for level in &self.levels {
            put(&mut w, level.ell as u64)?;
            for &s in &level.seeds {
                put(&mut w, s)?;
            }
            for codes in &level.codes {
                for c in codes {
                    put_words(&mut w, c.words())?;
                }
            }
        }
        let thresholds = self.thresholds.as_deref().unwrap_or(&[]);
        put(&mut w, thresholds.len() as u64)?;
        for t in thresholds {
            put(&mut w, t.to_bits())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads an index and regenerates every projection from its seed; the
    /// stored codes must match the regenerated ones.
    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a hypercube index (bad magic)".into()));
        }
        let d = get_usize(&mut r)?;
        let n = get_usize(&mut r)?;
        let epsilon = f64::from_bits(get(&mut r)?);
        let level_count = get_usize(&mut r)?;
        let k = get_usize(&mut r)?;
        let p = get_usize(&mut r)?;
        let seed = get(&mut r)?;
        if d == 0 || n == 0 || k == 0 || p == 0 || !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Format("corrupt index header".into()));
        }
        let schedule = level_schedule(d);
        if schedule.len() != level_count {
            return Err(Error::Format(format!("expected {} levels for d = {d}, found {level_count}", schedule.len())));
        }
        let dataset = (0..n).map(|_| get_bits(&mut r, d)).collect::<Result<Vec<_>>>()?;
        let mut seeds = Vec::with_capacity(level_count);
        let mut stored = Vec::with_capacity(level_count);
        for &ell in &schedule {
            if get_usize(&mut r)? != ell {
                return Err(Error::Format("level block lengths do not follow the schedule".into()));
            }
            seeds.push((0..k).map(|_| get(&mut r)).collect::<Result<Vec<_>>>()?);
            let mut codes = Vec::with_capacity(k);
            for _ in 0..k {
                codes.push((0..n).map(|_| get_bits(&mut r, p)).collect::<Result<Vec<_>>>()?);
            }
            stored.push(codes);
        }
        let count = get_usize(&mut r)?;
        let thresholds = if count == 0 {
            None
        } else {
            let t = (0..count).map(|_| get(&mut r).map(f64::from_bits)).collect::<Result<Vec<_>>>()?;
            check_thresholds(&t).map_err(|e| Error::Format(e.to_string()))?;
            Some(t)
        };
        let levels = assemble_levels(&dataset, epsilon, p, &schedule, seeds)?;
        if levels.iter().zip(&stored).any(|(l, s)| &l.codes != s) {
            return Err(Error::Format("stored codes do not match the regenerated projections".into()));
        }
        Ok(Self { d, epsilon, p, k, seed, dataset, levels, thresholds, counter: AtomicU64::new(0) })
    }
}

fn put<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_words<W: Write>(w: &mut W, words: &[u64]) -> Result<()> {
    for &v in words {
        put(w, v)?;
    }
    Ok(())
}

fn get<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn get_usize<R: Read>(r: &mut R) -> Result<usize> {
    usize::try_from(get(r)?).map_err(|_| Error::Format("field does not fit in usize".into()))
}

fn get_bits<R: Read>(r: &mut R, len: usize) -> Result<BitVector> {
    let words = (0..len.div_ceil(64)).map(|_| get(r)).collect::<Result<Vec<_>>>()?;
    BitVector::from_words(len, words).map_err(|e| Error::Format(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `h < ℓ/4`: code distance must stay below `(1+ε)·p·ξ·ℓ/4`.
    Near,
    /// `ℓ/4 ≤ h ≤ ℓ/(2ε)`: code distance over `h` must lie in `[(1−ε)pξ, (1+ε)pξ)`.
    Middle,
    /// `h > ℓ/(2ε)`: code distance must exceed `(1−ε)·p·ξ·ℓ/(2ε)`.
    Far,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeStats {
    pub regime: Regime,
    pub applicable: bool,
    /// Inclusive Hamming-distance range sampled uniformly.
    pub h_min: usize,
    pub h_max: usize,
    pub pairs: usize,
    pub violations: usize,
    pub rate: f64,
    pub std_error: f64,
    /// `rate ≤ e^{−c ε⁴ p} + 3·SE` with the fitted `c`.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub d: usize,
    pub ell: usize,
    pub epsilon: f64,
    pub p: usize,
    pub xi: f64,
    pub trials: usize,
    pub pairs_per_trial: usize,
    pub regimes: Vec<RegimeStats>,
    /// `c` solving `e^{−c ε⁴ p} =` pooled violation rate; `None` when no
    /// violation was observed.
    pub fitted_c: Option<f64>,
    pub failure_mass: f64,
}

impl RegimeReport {
    pub fn max_rate(&self) -> f64 {
        self.regimes.iter().filter(|r| r.applicable).map(|r| r.rate).fold(0.0, f64::max)
    }
}

fn regime_range(regime: Regime, d: usize, ell: usize, epsilon: f64) -> (usize, usize) {
    // Smallest integer ≥ ℓ/4, largest integer ≤ ℓ/(2ε).
    let quarter = ell.div_ceil(4);
    let upper = (ell as f64 / (2.0 * epsilon)).floor() as usize;
    match regime {
        Regime::Near => (0, quarter.saturating_sub(1).min(d)),
        Regime::Middle => (quarter, upper.min(d)),
        Regime::Far => (upper + 1, d),
    }
}

fn violates(regime: Regime, h: usize, code: usize, p: usize, xi: f64, ell: usize, eps: f64) -> bool {
    let scale = p as f64 * xi;
    let code = code as f64;
    match regime {
        Regime::Near => code >= (1.0 + eps) * scale * ell as f64 / 4.0,
        Regime::Middle => {
            let ratio = code / h as f64;
            ratio < (1.0 - eps) * scale || ratio >= (1.0 + eps) * scale
        }
        Regime::Far => code <= (1.0 - eps) * scale * ell as f64 / (2.0 * eps),
    }
}

/// Estimates the violation rate of each distance regime. Every trial draws
/// a fresh `U` (`d × p`, `ξ = ε²/ℓ`) and `pairs_per_trial` random pairs per
/// regime with Hamming distance uniform on the regime's range.
pub fn regime_check(
    d: usize,
    ell: usize,
    epsilon: f64,
    p: usize,
    trials: usize,
    pairs_per_trial: usize,
    seed: u64,
) -> Result<RegimeReport> {
    if ell == 0 || ell > d {
        return Err(invalid(format!("block length {ell} outside [1, d = {d}]")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if p == 0 || trials == 0 || pairs_per_trial == 0 {
        return Err(invalid("p, trials and pairs per trial must be positive"));
    }
    let xi = epsilon * epsilon / ell as f64;
    let regimes = [Regime::Near, Regime::Middle, Regime::Far];
    let ranges = regimes.map(|r| regime_range(r, d, ell, epsilon));

    let per_trial: Vec<[usize; 3]> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<[usize; 3]> {
            let trial_seed = derive_seed(seed, t as u64);
            let u = sample_hypercube_matrix(d, p, xi, trial_seed)?;
            let mut counts = [0usize; 3];
            for (ri, (&regime, &(lo, hi))) in regimes.iter().zip(&ranges).enumerate() {
                if lo > hi {
                    continue;
                }
                // Streams below p belong to U's columns.
                let mut stream = Stream::new(trial_seed, u64::MAX - ri as u64);
                for _ in 0..pairs_per_trial {
                    let h = lo + stream.below(hi - lo + 1);
                    let x = random_bits(d, &mut stream);
                    let mut y = x.clone();
                    for j in stream.sample_indices(d, h) {
                        y.flip(j);
                    }
                    let code = hamming_unchecked(&project_unchecked(&x, &u), &project_unchecked(&y, &u));
                    if violates(regime, h, code, p, xi, ell, epsilon) {
                        counts[ri] += 1;
                    }
                }
            }
            Ok(counts)
        })
        .collect::<Result<_>>()?;

    let total = trials * pairs_per_trial;
    let mut violations = [0usize; 3];
    for c in &per_trial {
        for i in 0..3 {
            violations[i] += c[i];
        }
    }
    let applicable: Vec<usize> = (0..3).filter(|&i| ranges[i].0 <= ranges[i].1).collect();
    let pooled_pairs = total * applicable.len();
    let pooled_violations: usize = applicable.iter().map(|&i| violations[i]).sum();
    let pooled_rate = pooled_violations as f64 / pooled_pairs.max(1) as f64;
    let exponent = epsilon.powi(4) * p as f64;
    let fitted_c = (pooled_rate > 0.0).then(|| -pooled_rate.ln() / exponent);
    let failure_mass = fitted_c.map_or(0.0, |c| (-c * exponent).exp());

    let stats = regimes
        .iter()
        .enumerate()
        .map(|(i, &regime)| {
            let (lo, hi) = ranges[i];
            let ok = lo <= hi;
            let pairs = if ok { total } else { 0 };
            let rate = if ok { violations[i] as f64 / total as f64 } else { 0.0 };
            let std_error = if ok { (rate * (1.0 - rate) / total as f64).sqrt() } else { 0.0 };
            RegimeStats {
                regime,
                applicable: ok,
                h_min: lo,
                h_max: if ok { hi } else { lo },
                pairs,
                violations: violations[i],
                rate,
                std_error,
                holds: !ok || rate <= failure_mass + 3.0 * std_error,
            }
        })
        .collect();

    Ok(RegimeReport { d, ell, epsilon, p, xi, trials, pairs_per_trial, regimes: stats, fitted_c, failure_mass })
}

fn random_bits(d: usize, stream: &mut Stream) -> BitVector {
    let mut words: Vec<u64> = (0..d.div_ceil(64)).map(|_| stream.next_u64()).collect();
    if d % 64 != 0 {
        *words.last_mut().expect("d > 0") &= (1u64 << (d % 64)) - 1;
    }
    BitVector::from_words(d, words).expect("padding cleared")
}

/// Uniformly random point of `{0,1}^d`.
pub fn random_point(d: usize, stream: &mut Stream) -> BitVector {
    random_bits(d, stream)
}

/// Exhaustive nearest neighbour, lowest index on ties.
pub fn exhaustive_nearest(dataset: &[BitVector], q: &BitVector) -> Result<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (i, x) in dataset.iter().enumerate() {
        let h = hamming_distance(q, x)?;
        if best.is_none_or(|(_, b)| h < b) {
            best = Some((i, h));
        }
    }
    best.ok_or_else(|| invalid("empty dataset"))
}
