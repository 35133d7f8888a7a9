use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sketchbench::data::accuracy;
use sketchbench::ensemble::{train_ensemble, train_ensemble_validated, EnsembleModel, Variant};
use sketchbench::random::derive_seed;
use sketchbench::RealMatrix;

use super::{prediction_set, stream, training_set, write_labels};
use crate::args::{EnsemblePredictArgs, EnsembleTrainArgs};
use crate::report::{Outcome, Timings};

#[derive(Serialize)]
struct Scores {
    accuracy: f64,
    mean_member_accuracy: f64,
    worst_member_accuracy: f64,
}

fn score(model: &EnsembleModel, x: &RealMatrix, y: &[usize]) -> Result<(Vec<usize>, Scores)> {
    let predicted = model.predict_batch(x)?;
    let member: Vec<f64> = model.member_predictions_batch(x)?.iter().map(|p| accuracy(p, y)).collect();
    let scores = Scores {
        accuracy: accuracy(&predicted, y),
        mean_member_accuracy: member.iter().sum::<f64>() / member.len() as f64,
        worst_member_accuracy: member.iter().copied().fold(1.0, f64::min),
    };
    Ok((predicted, scores))
}

#[derive(Serialize)]
struct TrainResults {
    n: usize,
    d: usize,
    p: usize,
    members: usize,
    variant: Variant,
    member_seeds: Vec<u64>,
    train: Scores,
}

pub fn train(a: &EnsembleTrainArgs, seed: u64, t: &mut Timings) -> Result<Outcome> {
    let (x, y) = t.time("load", || training_set(&a.data, a.d, seed))?;
    let model_seed = derive_seed(seed, stream::MODEL);
    let model = t.time("fit", || {
        if a.blocks == 0 {
            train_ensemble(&x, &y, a.m, a.p, model_seed)
        } else {
            train_ensemble_validated(&x, &y, a.blocks, a.per_block, a.p, a.validation_fraction, model_seed)
        }
    })?;
    let (_, scores) = t.time("evaluate", || score(&model, &x, &y))?;
    t.time("write", || -> Result<()> {
        let text = serde_json::to_string(&model)?;
        std::fs::write(&a.model, text).with_context(|| format!("writing {}", a.model.display()))
    })?;
    Outcome::ok(TrainResults {
        n: x.cols(),
        d: x.rows(),
        p: model.p,
        members: model.members.len(),
        variant: model.variant.clone(),
        member_seeds: model.members.iter().map(|m| m.seed).collect(),
        train: scores,
    })
}

#[derive(Serialize)]
struct PredictResults {
    n: usize,
    predictions: usize,
    scores: Option<Scores>,
}

pub fn predict(a: &EnsemblePredictArgs, seed: u64, out: Option<&Path>, t: &mut Timings) -> Result<Outcome> {
    let model: EnsembleModel = t.time("load", || -> Result<_> {
        let text = std::fs::read_to_string(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
        Ok(serde_json::from_str(&text)?)
    })?;
    let (x, y) = t.time("data", || {
        prediction_set(a.data.input.as_ref(), a.data.labels.as_ref(), a.data.n, model.d, a.data.separation, seed)
    })?;
    let (predicted, scores) = t.time("predict", || -> Result<_> {
        match &y {
            Some(y) => score(&model, &x, y).map(|(p, s)| (p, Some(s))),
            None => Ok((model.predict_batch(&x)?, None)),
        }
    })?;
    write_labels(out, &predicted)?;
    Outcome::ok(PredictResults { n: x.cols(), predictions: predicted.len(), scores })
}
