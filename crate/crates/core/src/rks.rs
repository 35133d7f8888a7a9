//! Random kitchen sinks and single-layer extreme learning machines: random
//! nonlinear features followed by a ridge-regularized linear read-out.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{argmax, one_hot};
use crate::error::{invalid, shape, Error, Result};
use crate::linalg::{dot, Cholesky, RealMatrix};
use crate::random::{derive_seed, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivationSpec {
    /// `cos(wᵀx + b)`.
    Cosine,
    /// `max(0, wᵀx)`.
    Relu,
    /// `sign(wᵀx)`, with `sign(0) = 0`.
    Sign,
}

impl ActivationSpec {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "cos" | "cosine" => Ok(Self::Cosine),
            "relu" => Ok(Self::Relu),
            "sign" => Ok(Self::Sign),
            other => Err(invalid(format!("unknown activation '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Cosine => "cos",
            Self::Relu => "relu",
            Self::Sign => "sign",
        }
    }

    /// Whether `sup |φ| ≤ 1`.
    pub fn bounded(&self) -> bool {
        !matches!(self, Self::Relu)
    }

    fn apply(&self, a: f64, bias: f64) -> f64 {
        match self {
            Self::Cosine => (a + bias).cos(),
            Self::Relu => a.max(0.0),
            Self::Sign => {
                if a > 0.0 {
                    1.0
                } else if a < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomParameters {
    /// `d × p`, entries `N(0, 1)`.
    pub w: RealMatrix,
    /// Uniform on `[0, 2π)`; present only for the cosine activation.
    pub bias: Option<Vec<f64>>,
    pub activation: ActivationSpec,
    pub seed: u64,
}

impl RandomParameters {
    pub fn d(&self) -> usize {
        self.w.rows()
    }

    pub fn p(&self) -> usize {
        self.w.cols()
    }
}

/// Column `t` of `W` comes from stream `t`; the biases from stream `p`.
pub fn sample_parameters(d: usize, p: usize, activation: ActivationSpec, seed: u64) -> Result<RandomParameters> {
    if d == 0 || p == 0 {
        return Err(invalid(format!("need d, p >= 1, got d = {d}, p = {p}")));
    }
    let mut data = Vec::with_capacity(d * p);
    for t in 0..p {
        let mut s = Stream::new(seed, t as u64);
        data.extend((0..d).map(|_| s.gaussian()));
    }
    let bias = (activation == ActivationSpec::Cosine).then(|| {
        let mut s = Stream::new(seed, p as u64);
        (0..p).map(|_| TAU * s.uniform()).collect()
    });
    Ok(RandomParameters { w: RealMatrix::from_col_major(d, p, data)?, bias, activation, seed })
}

/// `p × n` matrix whose column `i` is `[φ(x_i; w_1), …, φ(x_i; w_p)]`.
pub fn features(x: &RealMatrix, params: &RandomParameters) -> Result<RealMatrix> {
    if x.rows() != params.d() {
        return Err(shape(format!("data has {} rows, parameters expect {}", x.rows(), params.d())));
    }
    let p = params.p();
    let cols: Vec<Vec<f64>> = (0..x.cols())
        .into_par_iter()
        .map(|j| {
            let xj = x.col(j);
            (0..p)
                .map(|t| {
                    let b = params.bias.as_ref().map_or(0.0, |b| b[t]);
                    params.activation.apply(dot(params.w.col(t), xj), b)
                })
                .collect()
        })
        .collect();
    RealMatrix::from_columns(&cols)
}

/// Minimizer of `(1/n)‖αᵀG − T‖²_F + λ‖α‖²_F`, i.e.
/// `α = (GGᵀ/n + λI)⁻¹ G Tᵀ / n`, returned as `p × c`.
pub fn fit_ridge(g: &RealMatrix, t: &RealMatrix, lambda: f64) -> Result<RealMatrix> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("ridge strength must be positive, got {lambda}")));
    }
    if g.cols() != t.cols() {
        return Err(shape(format!("{} feature columns but {} targets", g.cols(), t.cols())));
    }
    let n = g.cols() as f64;
    let gt = g.transpose();
    let mut a = g.matmul(&gt)?.scale(1.0 / n);
    for i in 0..a.rows() {
        a.set(i, i, a.get(i, i) + lambda);
    }
    let rhs = g.matmul(&t.transpose())?.scale(1.0 / n);
    Cholesky::factor(&a, 0.0)?.solve(&rhs)
}

/// `(1/n)‖αᵀG − T‖²_F + λ‖α‖²_F`.
pub fn ridge_objective(g: &RealMatrix, t: &RealMatrix, alpha: &RealMatrix, lambda: f64) -> Result<f64> {
    let resid = alpha.tr_matmul(g)?.sub(t)?;
    Ok(resid.frobenius_norm().powi(2) / g.cols() as f64 + lambda * alpha.frobenius_norm().powi(2))
}

/// `(2/n) G (αᵀG − T)ᵀ + 2λα`.
pub fn ridge_gradient(g: &RealMatrix, t: &RealMatrix, alpha: &RealMatrix, lambda: f64) -> Result<RealMatrix> {
    let resid = alpha.tr_matmul(g)?.sub(t)?;
    g.matmul(&resid.transpose())?.scale(2.0 / g.cols() as f64).add(&alpha.scale(2.0 * lambda))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RksModel {
    pub params: RandomParameters,
    pub lambda: f64,
    /// `p × c` read-out weights; `None` until fitted.
    pub alpha: Option<RealMatrix>,
}

impl RksModel {
    pub fn new(params: RandomParameters, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("ridge strength must be positive, got {lambda}")));
        }
        Ok(Self { params, lambda, alpha: None })
    }

    /// Fits the read-out to `c × n` targets.
    pub fn fit(&mut self, x: &RealMatrix, targets: &RealMatrix) -> Result<()> {
        let g = features(x, &self.params)?;
        self.alpha = Some(fit_ridge(&g, targets, self.lambda)?);
        Ok(())
    }

    /// Fits one-hot targets for `labels`.
    pub fn fit_labels(&mut self, x: &RealMatrix, labels: &[usize], classes: usize) -> Result<()> {
        self.fit(x, &one_hot(labels, classes)?)
    }

    fn alpha(&self) -> Result<&RealMatrix> {
        self.alpha.as_ref().ok_or_else(|| invalid("model has not been fitted"))
    }

    /// `αᵀ features(X)`, `c × n`.
    pub fn predict(&self, x: &RealMatrix) -> Result<RealMatrix> {
        let alpha = self.alpha()?;
        alpha.tr_matmul(&features(x, &self.params)?)
    }

    /// Argmax of the outputs, lowest index on ties.
    pub fn classify(&self, x: &RealMatrix) -> Result<Vec<usize>> {
        let out = self.predict(x)?;
        Ok(out.columns().map(argmax).collect())
    }

    pub fn classes(&self) -> Result<usize> {
        Ok(self.alpha()?.cols())
    }
}

/// Convenience: sample parameters and fit to labels in one step.
pub fn train_classifier(
    x: &RealMatrix,
    labels: &[usize],
    classes: usize,
    p: usize,
    activation: ActivationSpec,
    lambda: f64,
    seed: u64,
) -> Result<RksModel> {
    let mut model = RksModel::new(sample_parameters(x.rows(), p, activation, seed)?, lambda)?;
    model.fit_labels(x, labels, classes)?;
    Ok(model)
}

/// Mean squared loss `(1/n) Σ ‖g(x_i) − t_i‖²`.
pub fn squared_risk(predicted: &RealMatrix, targets: &RealMatrix) -> Result<f64> {
    let diff = predicted.sub(targets)?;
    Ok(diff.frobenius_norm().powi(2) / targets.cols() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub loss: String,
    pub empirical_risk: f64,
    pub holdout_risk: f64,
    pub n: usize,
    pub p: usize,
    /// False for unbounded activations, where the risk bound's precondition fails.
    pub bounded_activation: bool,
}

pub fn risk_report(
    model: &RksModel,
    train: (&RealMatrix, &RealMatrix),
    holdout: (&RealMatrix, &RealMatrix),
) -> Result<RiskReport> {
    Ok(RiskReport {
        loss: "squared".into(),
        empirical_risk: squared_risk(&model.predict(train.0)?, train.1)?,
        holdout_risk: squared_risk(&model.predict(holdout.0)?, holdout.1)?,
        n: train.0.cols(),
        p: model.params.p(),
        bounded_activation: model.params.activation.bounded(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskGrid {
    pub p_list: Vec<usize>,
    pub n_list: Vec<usize>,
    pub seeds: usize,
    /// `risks[i][j]`: mean holdout risk at `p_list[i]`, `n_list[j]`.
    pub risks: Vec<Vec<f64>>,
    /// Risk never rises by more than `slack` along `p_list` (fixed n).
    pub p_trend_ok: bool,
    /// Risk never rises by more than `slack` along `n_list` (fixed p).
    pub n_trend_ok: bool,
    pub slack: f64,
}

/// Mean holdout squared risk over `seeds` repetitions for every `(p, n)`.
/// `generator(n, seed)` must return `(X, targets)`; repetition `s` trains on
/// `generator(n, 2s)` and evaluates on `generator(holdout_n, 2s + 1)`.
#[allow(clippy::too_many_arguments)]
pub fn risk_scaling_experiment<F>(
    p_list: &[usize],
    n_list: &[usize],
    generator: F,
    holdout_n: usize,
    activation: ActivationSpec,
    lambda: f64,
    seeds: usize,
    seed: u64,
) -> Result<RiskGrid>
where
    F: Fn(usize, u64) -> Result<(RealMatrix, RealMatrix)> + Sync,
{
    if p_list.is_empty() || n_list.is_empty() || seeds == 0 {
        return Err(invalid("p and n lists and the seed count must be nonempty"));
    }
    let cells: Vec<(usize, usize, usize)> = (0..p_list.len())
        .flat_map(|i| (0..n_list.len()).flat_map(move |j| (0..seeds).map(move |s| (i, j, s))))
        .collect();
    let risks_flat: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j, s)| -> Result<f64> {
            let rep = derive_seed(seed, s as u64);
            let (xtr, ttr) = generator(n_list[j], derive_seed(rep, 0))?;
            let (xte, tte) = generator(holdout_n, derive_seed(rep, 1))?;
            let params = sample_parameters(xtr.rows(), p_list[i], activation, derive_seed(rep, 2))?;
            let mut model = RksModel::new(params, lambda)?;
            model.fit(&xtr, &ttr)?;
            let r = squared_risk(&model.predict(&xte)?, &tte)?;
            if r.is_finite() {
                Ok(r)
            } else {
                Err(Error::NonFinite)
            }
        })
        .collect::<Result<_>>()?;
    let mut risks = vec![vec![0.0; n_list.len()]; p_list.len()];
    for (&(i, j, _), r) in cells.iter().zip(&risks_flat) {
        risks[i][j] += r / seeds as f64;
    }
    let slack = 0.01;
    let p_trend_ok = (0..n_list.len()).all(|j| (1..p_list.len()).all(|i| risks[i][j] <= risks[i - 1][j] + slack));
    let n_trend_ok = (0..p_list.len()).all(|i| (1..n_list.len()).all(|j| risks[i][j] <= risks[i][j - 1] + slack));
    Ok(RiskGrid { p_list: p_list.to_vec(), n_list: n_list.to_vec(), seeds, risks, p_trend_ok, n_trend_ok, slack })
}
