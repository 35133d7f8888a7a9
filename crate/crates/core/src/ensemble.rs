//! Ensembles of random projections: max-pooling over several projections and
//! majority-vote classifiers whose members are 1-NN on projected data.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{accuracy, two_clusters};
use crate::error::{invalid, shape, Result};
use crate::linalg::{norm2, squared_distance, RealMatrix};
use crate::random::{derive_seed, sample_projection, DistributionSpec, ProjectionMatrix, Stream};

/// Element-wise maximum of `U_1ᵀx, …, U_mᵀx`.
pub fn max_pool_projection(x: &[f64], projections: &[ProjectionMatrix]) -> Result<Vec<f64>> {
    let first = projections.first().ok_or_else(|| invalid("need at least one projection"))?;
    let (d, p) = (first.d(), first.p());
    if let Some(bad) = projections.iter().find(|u| u.d() != d || u.p() != p) {
        return Err(shape(format!("projection is {}x{}, expected {d}x{p}", bad.d(), bad.p())));
    }
    let mut out = vec![f64::NEG_INFINITY; p];
    for u in projections {
        for (o, v) in out.iter_mut().zip(u.mat.tr_matvec(x)?) {
            *o = o.max(v);
        }
    }
    Ok(out)
}

/// Scales every column to unit ℓ2 norm.
pub fn normalize_columns(m: &RealMatrix) -> Result<RealMatrix> {
    let cols: Vec<Vec<f64>> = m
        .columns()
        .enumerate()
        .map(|(j, c)| {
            let n = norm2(c);
            if n == 0.0 {
                Err(invalid(format!("column {j} is zero and cannot be normalized")))
            } else {
                Ok(c.iter().map(|v| v / n).collect())
            }
        })
        .collect::<Result<_>>()?;
    RealMatrix::from_columns(&cols)
}

/// Most frequent label; ties go to the smallest label.
pub fn majority_vote(votes: &[usize]) -> Result<usize> {
    let mut counts = BTreeMap::new();
    for &v in votes {
        *counts.entry(v).or_insert(0usize) += 1;
    }
    // BTreeMap iterates in ascending label order, and max_by_key keeps the
    // last maximum, so walk it in reverse.
    counts.into_iter().rev().max_by_key(|&(_, c)| c).map(|(l, _)| l).ok_or_else(|| invalid("no votes"))
}

/// 1-NN over projected data, ties to the lowest training index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    /// `d × p`, unit-norm columns.
    pub projection: RealMatrix,
    pub seed: u64,
    /// `p × n_member` projected training points.
    pub projected: RealMatrix,
    pub labels: Vec<usize>,
}

impl Member {
    fn fit(projection: RealMatrix, seed: u64, x: &RealMatrix, labels: Vec<usize>) -> Result<Self> {
        let projected = projection.tr_matmul(x)?;
        Ok(Self { projection, seed, projected, labels })
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let z = self.projection.tr_matvec(x)?;
        Ok(self.labels[nearest(&self.projected, &z)])
    }
}

fn nearest(points: &RealMatrix, z: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, c) in points.columns().enumerate() {
        let d = squared_distance(c, z);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Variant {
    Plain,
    BlockValidated { blocks: usize, per_block: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub d: usize,
    pub p: usize,
    pub members: Vec<Member>,
    pub variant: Variant,
    pub seed: u64,
}

impl EnsembleModel {
    pub fn member_predictions(&self, x: &[f64]) -> Result<Vec<usize>> {
        if self.members.is_empty() {
            return Err(invalid("ensemble has no members"));
        }
        self.members.par_iter().map(|m| m.predict(x)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        majority_vote(&self.member_predictions(x)?)
    }

    /// Predictions for every column.
    pub fn predict_batch(&self, x: &RealMatrix) -> Result<Vec<usize>> {
        x.columns().map(|c| self.predict(c)).collect()
    }

    /// Per-member predictions for every column, `members × n`.
    pub fn member_predictions_batch(&self, x: &RealMatrix) -> Result<Vec<Vec<usize>>> {
        self.members.par_iter().map(|m| x.columns().map(|c| m.predict(c)).collect()).collect()
    }
}

pub fn predict_ensemble(model: &EnsembleModel, x: &[f64]) -> Result<usize> {
    model.predict(x)
}

fn check_training(x: &RealMatrix, labels: &[usize], p: usize) -> Result<()> {
    if labels.len() != x.cols() {
        return Err(shape(format!("{} labels for {} samples", labels.len(), x.cols())));
    }
    if p == 0 {
        return Err(invalid("p must be positive"));
    }
    Ok(())
}

/// Gaussian `d × p` projection from stream `index` of `seed`, columns scaled
/// to unit length.
fn member_projection(d: usize, p: usize, seed: u64, index: usize) -> Result<(RealMatrix, u64)> {
    let s = derive_seed(seed, index as u64);
    Ok((normalize_columns(&sample_projection(d, p, DistributionSpec::GaussianUnit, s)?.mat)?, s))
}

/// `m` members, each a 1-NN classifier over the whole training set projected
/// by its own random matrix.
pub fn train_ensemble(x: &RealMatrix, labels: &[usize], m: usize, p: usize, seed: u64) -> Result<EnsembleModel> {
    check_training(x, labels, p)?;
    if m == 0 {
        return Err(invalid("ensemble size must be positive"));
    }
    let members = (0..m)
        .into_par_iter()
        .map(|j| {
            let (u, s) = member_projection(x.rows(), p, seed, j)?;
            Member::fit(u, s, x, labels.to_vec())
        })
        .collect::<Result<_>>()?;
    Ok(EnsembleModel { d: x.rows(), p, members, variant: Variant::Plain, seed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub chosen: usize,
    pub validation_errors: Vec<f64>,
}

/// Index of the candidate with the lowest 1-NN validation error (lowest
/// index on ties).
pub fn select_projection(
    candidates: &[RealMatrix],
    train: (&RealMatrix, &[usize]),
    validation: (&RealMatrix, &[usize]),
) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(invalid("no candidate projections"));
    }
    let errors: Vec<f64> = candidates
        .iter()
        .map(|u| -> Result<f64> {
            let member = Member::fit(u.clone(), 0, train.0, train.1.to_vec())?;
            let pred = validation.0.columns().map(|c| member.predict(c)).collect::<Result<Vec<_>>>()?;
            Ok(1.0 - accuracy(&pred, validation.1))
        })
        .collect::<Result<_>>()?;
    let mut chosen = 0;
    for (i, &e) in errors.iter().enumerate() {
        if e < errors[chosen] {
            chosen = i;
        }
    }
    Ok(Selection { chosen, validation_errors: errors })
}

/// Splits the data into `blocks` disjoint blocks after a seeded shuffle. In
/// each block the last `validation_fraction` of a second seeded shuffle is
/// held out, `per_block` projections are tried, and the one with the lowest
/// validation error is kept (trained on the block's training part).
pub fn train_ensemble_validated(
    x: &RealMatrix,
    labels: &[usize],
    blocks: usize,
    per_block: usize,
    p: usize,
    validation_fraction: f64,
    seed: u64,
) -> Result<EnsembleModel> {
    check_training(x, labels, p)?;
    if blocks == 0 || per_block == 0 {
        return Err(invalid("blocks and candidates per block must be positive"));
    }
    if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
        return Err(invalid(format!("validation fraction must lie in (0, 1), got {validation_fraction}")));
    }
    let n = x.cols();
    let mut order: Vec<usize> = (0..n).collect();
    Stream::new(seed, u64::MAX).shuffle(&mut order);
    let size = n / blocks;
    let members = (0..blocks)
        .into_par_iter()
        .map(|b| -> Result<Member> {
            let end = if b + 1 == blocks { n } else { (b + 1) * size };
            let mut idx = order[b * size..end].to_vec();
            Stream::new(seed, u64::MAX - 1 - b as u64).shuffle(&mut idx);
            let n_val = (idx.len() as f64 * validation_fraction).ceil() as usize;
            if n_val == 0 || n_val >= idx.len() {
                return Err(invalid(format!("block {b} has {} samples, too few to split", idx.len())));
            }
            let (tr, va) = idx.split_at(idx.len() - n_val);
            let xtr = x.select_columns(tr)?;
            let ytr: Vec<usize> = tr.iter().map(|&i| labels[i]).collect();
            let xva = x.select_columns(va)?;
            let yva: Vec<usize> = va.iter().map(|&i| labels[i]).collect();
            let candidates: Vec<(RealMatrix, u64)> =
                (0..per_block).map(|j| member_projection(x.rows(), p, seed, b * per_block + j)).collect::<Result<_>>()?;
            let mats: Vec<RealMatrix> = candidates.iter().map(|c| c.0.clone()).collect();
            let sel = select_projection(&mats, (&xtr, &ytr), (&xva, &yva))?;
            let (u, s) = candidates.into_iter().nth(sel.chosen).expect("chosen index in range");
            Member::fit(u, s, &xtr, ytr)
        })
        .collect::<Result<_>>()?;
    Ok(EnsembleModel { d: x.rows(), p, members, variant: Variant::BlockValidated { blocks, per_block }, seed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRun {
    pub seed: u64,
    pub ensemble_accuracy: f64,
    pub mean_member_accuracy: f64,
    pub worst_member_accuracy: f64,
    pub validated_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub p: usize,
    pub blocks: usize,
    pub per_block: usize,
    pub runs: Vec<BenchmarkRun>,
    pub mean_ensemble_accuracy: f64,
    pub mean_member_accuracy: f64,
    pub mean_validated_accuracy: f64,
}

/// Two-cluster benchmark: for each seed, trains a plain ensemble and a
/// block-validated one on `n` points and scores both on `n` fresh points.
#[allow(clippy::too_many_arguments)]
pub fn two_cluster_benchmark(
    n: usize,
    d: usize,
    m: usize,
    p: usize,
    blocks: usize,
    per_block: usize,
    separation: f64,
    seeds: usize,
    seed: u64,
) -> Result<BenchmarkReport> {
    let runs: Vec<BenchmarkRun> = (0..seeds as u64)
        .map(|s| -> Result<BenchmarkRun> {
            let run_seed = derive_seed(seed, s);
            let (x, y) = two_clusters(n, d, separation, derive_seed(run_seed, 0))?;
            let (xh, yh) = two_clusters(n, d, separation, derive_seed(run_seed, 1))?;
            let model = train_ensemble(&x, &y, m, p, derive_seed(run_seed, 2))?;
            let votes = model.member_predictions_batch(&xh)?;
            let member_acc: Vec<f64> = votes.iter().map(|v| accuracy(v, &yh)).collect();
            let ensemble = accuracy(&model.predict_batch(&xh)?, &yh);
            let validated = train_ensemble_validated(&x, &y, blocks, per_block, p, 0.2, derive_seed(run_seed, 3))?;
            Ok(BenchmarkRun {
                seed: run_seed,
                ensemble_accuracy: ensemble,
                mean_member_accuracy: member_acc.iter().sum::<f64>() / m as f64,
                worst_member_accuracy: member_acc.iter().copied().fold(1.0, f64::min),
                validated_accuracy: accuracy(&validated.predict_batch(&xh)?, &yh),
            })
        })
        .collect::<Result<_>>()?;
    let mean = |f: fn(&BenchmarkRun) -> f64| runs.iter().map(f).sum::<f64>() / runs.len().max(1) as f64;
    Ok(BenchmarkReport {
        n,
        d,
        m,
        p,
        blocks,
        per_block,
        mean_ensemble_accuracy: mean(|r| r.ensemble_accuracy),
        mean_member_accuracy: mean(|r| r.mean_member_accuracy),
        mean_validated_accuracy: mean(|r| r.validated_accuracy),
        runs,
    })
}
