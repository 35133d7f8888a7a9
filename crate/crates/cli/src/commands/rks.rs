use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sketchbench::data::{accuracy, one_hot};
use sketchbench::random::derive_seed;
use sketchbench::rks::{sample_parameters, squared_risk, train_classifier, ActivationSpec, RksModel};
use sketchbench::RealMatrix;

use super::{invalid, prediction_set, stream, training_set, write_labels};
use crate::args::{RksPredictArgs, RksTrainArgs};
use crate::report::{Outcome, Timings};

/// On-disk model: the random layer is regenerated from its seed.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    seed: u64,
    d: usize,
    p: usize,
    activation: String,
    lambda: f64,
    classes: usize,
    alpha: RealMatrix,
}

impl ModelFile {
    fn into_model(self) -> Result<RksModel> {
        let params = sample_parameters(self.d, self.p, ActivationSpec::from_name(&self.activation)?, self.seed)?;
        if self.alpha.shape() != (self.p, self.classes) {
            return Err(invalid(format!("read-out is {:?}, expected {}x{}", self.alpha.shape(), self.p, self.classes)));
        }
        let mut model = RksModel::new(params, self.lambda)?;
        model.alpha = Some(self.alpha);
        Ok(model)
    }
}

#[derive(Serialize)]
struct TrainResults {
    n: usize,
    d: usize,
    p: usize,
    classes: usize,
    activation: &'static str,
    lambda: f64,
    train_accuracy: f64,
    empirical_risk: f64,
}

pub fn train(a: &RksTrainArgs, seed: u64, t: &mut Timings) -> Result<Outcome> {
    let activation = ActivationSpec::from_name(&a.activation)?;
    let (x, y) = t.time("load", || training_set(&a.data, a.d, seed))?;
    let classes = y.iter().max().map_or(0, |&m| m + 1).max(2);
    let model_seed = derive_seed(seed, stream::MODEL);
    let model = t.time("fit", || train_classifier(&x, &y, classes, a.p, activation, a.lambda, model_seed))?;
    let (acc, risk) = t.time("evaluate", || -> Result<_> {
        let acc = accuracy(&model.classify(&x)?, &y);
        Ok((acc, squared_risk(&model.predict(&x)?, &one_hot(&y, classes)?)?))
    })?;
    let file = ModelFile {
        seed: model_seed,
        d: x.rows(),
        p: a.p,
        activation: activation.name().to_string(),
        lambda: a.lambda,
        classes,
        alpha: model.alpha.clone().expect("fitted model"),
    };
    t.time("write", || -> Result<()> {
        let text = serde_json::to_string(&file)?;
        std::fs::write(&a.model, text).with_context(|| format!("writing {}", a.model.display()))
    })?;
    Outcome::ok(TrainResults {
        n: x.cols(),
        d: x.rows(),
        p: a.p,
        classes,
        activation: activation.name(),
        lambda: a.lambda,
        train_accuracy: acc,
        empirical_risk: risk,
    })
}

#[derive(Serialize)]
struct PredictResults {
    n: usize,
    class_counts: Vec<usize>,
    accuracy: Option<f64>,
}

pub fn predict(a: &RksPredictArgs, seed: u64, out: Option<&Path>, t: &mut Timings) -> Result<Outcome> {
    let model = t.time("load", || -> Result<_> {
        let text = std::fs::read_to_string(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
        serde_json::from_str::<ModelFile>(&text)?.into_model()
    })?;
    let d = model.params.d();
    let (x, y) = t.time("data", || {
        prediction_set(a.data.input.as_ref(), a.data.labels.as_ref(), a.data.n, d, a.data.separation, seed)
    })?;
    let predicted = t.time("predict", || model.classify(&x))?;
    write_labels(out, &predicted)?;
    let mut counts = vec![0; model.classes()?];
    for &c in &predicted {
        counts[c] += 1;
    }
    Outcome::ok(PredictResults {
        n: x.cols(),
        class_counts: counts,
        accuracy: y.as_ref().map(|y| accuracy(&predicted, y)),
    })
}
