use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use sketchbench::hypercube::{
    build_index, default_thresholds, exhaustive_nearest, quantize_columns, random_point, HypercubeIndex, QueryResult,
};
use sketchbench::linalg::hamming_distance;
use sketchbench::random::derive_seed;
use sketchbench::{BitVector, RealMatrix, Stream};

use super::{invalid, load_points, stream};
use crate::args::{AnnBuildArgs, AnnQueryArgs};
use crate::report::{Outcome, Timings};

fn binary_columns(x: &RealMatrix) -> Result<Vec<BitVector>> {
    x.columns()
        .map(|c| {
            if let Some(v) = c.iter().find(|&&v| v != 0.0 && v != 1.0) {
                return Err(invalid(format!("binary input must be 0/1, found {v}")));
            }
            Ok(BitVector::from_bools(&c.iter().map(|&v| v == 1.0).collect::<Vec<_>>()))
        })
        .collect()
}

#[derive(Serialize)]
struct BuildResults {
    d: usize,
    n: usize,
    epsilon: f64,
    p: usize,
    k: usize,
    levels: Vec<usize>,
    code_bits: usize,
    thresholds: Option<usize>,
}

pub fn build(a: &AnnBuildArgs, seed: u64, t: &mut Timings) -> Result<Outcome> {
    let (dataset, thresholds) = t.time("load", || -> Result<_> {
        match &a.input {
            Some(path) => {
                let x = load_points(path)?;
                if a.binary {
                    Ok((binary_columns(&x)?, None))
                } else {
                    let thr = default_thresholds(&x, a.thresholds)?;
                    Ok((quantize_columns(&x, &thr)?, Some(thr)))
                }
            }
            None => {
                if a.n == 0 || a.d == 0 {
                    return Err(invalid("need n, d >= 1"));
                }
                let mut s = Stream::new(derive_seed(seed, stream::DATA), 0);
                Ok(((0..a.n).map(|_| random_point(a.d, &mut s)).collect(), None))
            }
        }
    })?;
    let mut index = t.time("build", || build_index(dataset, a.epsilon, a.k, derive_seed(seed, stream::MODEL)))?;
    let threshold_count = thresholds.as_ref().map(Vec::len);
    if let Some(thr) = thresholds {
        index.set_thresholds(thr)?;
    }
    t.time("write", || -> Result<()> {
        let mut w = BufWriter::new(File::create(&a.index).with_context(|| format!("creating {}", a.index.display()))?);
        index.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    })?;
    Outcome::ok(BuildResults {
        d: index.d(),
        n: index.n(),
        epsilon: index.epsilon(),
        p: index.p(),
        k: index.k(),
        levels: index.levels().iter().map(|l| l.ell).collect(),
        code_bits: index.code_bits(),
        thresholds: threshold_count,
    })
}

#[derive(Serialize)]
struct Answer {
    #[serde(flatten)]
    result: QueryResult,
    nearest_distance: usize,
    /// Smallest level radius covering the true nearest distance.
    target_radius: f64,
    success: bool,
    sound: bool,
}

#[derive(Serialize)]
struct QueryResults {
    queries: usize,
    planted: bool,
    found: usize,
    recall: f64,
    min_recall: Option<f64>,
    soundness_failures: usize,
    mean_candidates: f64,
    /// Mean of returned distance over true nearest distance (found answers,
    /// nonzero nearest distance).
    mean_approximation_ratio: Option<f64>,
    answers: Vec<Answer>,
}

fn target_radius(index: &HypercubeIndex, h: usize) -> f64 {
    index
        .levels()
        .iter()
        .map(|l| l.radius())
        .find(|&r| r >= h as f64)
        .unwrap_or_else(|| index.levels().last().map_or(0.0, |l| l.radius()))
}

pub fn query(a: &AnnQueryArgs, seed: u64, out: Option<&Path>, t: &mut Timings) -> Result<Outcome> {
    let index = t.time("load", || -> Result<_> {
        let r = BufReader::new(File::open(&a.index).with_context(|| format!("opening {}", a.index.display()))?);
        Ok(HypercubeIndex::read_from(r)?)
    })?;
    let queries: Vec<BitVector> = t.time("queries", || -> Result<_> {
        match &a.queries {
            Some(path) => {
                let x = load_points(path)?;
                match index.thresholds() {
                    Some(thr) if !a.binary => Ok(quantize_columns(&x, thr)?),
                    _ => binary_columns(&x),
                }
            }
            None => {
                if a.flips > index.d() {
                    return Err(invalid(format!("cannot flip {} of {} bits", a.flips, index.d())));
                }
                let mut s = Stream::new(derive_seed(seed, stream::QUERIES), 0);
                Ok((0..a.planted)
                    .map(|_| {
                        let mut q = index.dataset()[s.below(index.n())].clone();
                        for j in s.sample_indices(index.d(), a.flips) {
                            q.flip(j);
                        }
                        q
                    })
                    .collect())
            }
        }
    })?;
    if queries.is_empty() {
        return Err(invalid("no queries"));
    }
    let eps = index.epsilon();
    let answers: Vec<Answer> = t.time("query", || {
        queries
            .par_iter()
            .enumerate()
            .map(|(i, q)| -> Result<Answer> {
                let result = index.query_with_projection(q, i % index.k())?;
                let (_, nearest) = exhaustive_nearest(index.dataset(), q)?;
                let target = target_radius(&index, nearest);
                let (success, sound) = match (result.index, result.distance, result.certified_radius) {
                    (Some(j), Some(dist), Some(r)) => {
                        let actual = hamming_distance(q, &index.dataset()[j])?;
                        let sound = actual == dist && dist as f64 <= (1.0 + eps) * r;
                        (sound && dist as f64 <= (1.0 + eps) * target, sound)
                    }
                    _ => (false, true),
                };
                Ok(Answer { result, nearest_distance: nearest, target_radius: target, success, sound })
            })
            .collect::<Result<_>>()
    })?;
    if let Some(path) = out {
        t.time("write", || -> Result<()> {
            let mut w = BufWriter::new(File::create(path)?);
            writeln!(w, "query,index,distance")?;
            for (i, ans) in answers.iter().enumerate() {
                let fmt = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
                writeln!(w, "{i},{},{}", fmt(ans.result.index), fmt(ans.result.distance))?;
            }
            w.flush()?;
            Ok(())
        })?;
    }
    let found = answers.iter().filter(|a| a.result.found).count();
    let recall = answers.iter().filter(|a| a.success).count() as f64 / answers.len() as f64;
    let soundness_failures = answers.iter().filter(|a| !a.sound).count();
    let ratios: Vec<f64> = answers
        .iter()
        .filter(|a| a.nearest_distance > 0)
        .filter_map(|a| a.result.distance.map(|d| d as f64 / a.nearest_distance as f64))
        .collect();
    let planted = a.queries.is_none();
    let verified = soundness_failures == 0 && (!planted || recall >= a.min_recall);
    Outcome::checked(
        QueryResults {
            queries: answers.len(),
            planted,
            found,
            recall,
            min_recall: planted.then_some(a.min_recall),
            soundness_failures,
            mean_candidates: answers.iter().map(|a| a.result.candidates_checked as f64).sum::<f64>()
                / answers.len() as f64,
            mean_approximation_ratio: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
            answers,
        },
        verified,
    )
}
