//! Expected log predictive density and posterior-averaged RMSE.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predict::{PredictiveDensity, PredictiveDraws};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalKind {
    /// Observations with measurement noise, scored by ELPD.
    Noisy,
    /// Noise-free truth, scored by RMSE.
    Truth,
}

/// Held-out test inputs with either noisy observations or the noise-free truth.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSet {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    kind: EvalKind,
    split_label: String,
}

impl EvaluationSet {
    pub fn new(
        inputs: Vec<Vec<f64>>,
        targets: Vec<f64>,
        kind: EvalKind,
        split_label: impl Into<String>,
    ) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::Dimension(format!(
                "{} inputs and {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput(
                "evaluation targets must be finite".into(),
            ));
        }
        Ok(Self {
            inputs,
            targets,
            kind,
            split_label: split_label.into(),
        })
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn kind(&self) -> EvalKind {
        self.kind
    }

    pub fn split_label(&self) -> &str {
        &self.split_label
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Appends `other`'s rows under a new label; kinds must agree.
    pub fn concat(&self, other: &Self, label: impl Into<String>) -> Result<Self> {
        if self.kind != other.kind {
            return Err(Error::InvalidInput(
                "cannot join noisy and truth sets".into(),
            ));
        }
        let mut inputs = self.inputs.clone();
        inputs.extend(other.inputs.iter().cloned());
        let mut targets = self.targets.clone();
        targets.extend_from_slice(&other.targets);
        Self::new(inputs, targets, self.kind, label)
    }

    /// Keeps the listed rows under a new label.
    pub fn select(&self, rows: &[usize], label: impl Into<String>) -> Self {
        Self {
            inputs: rows.iter().map(|&i| self.inputs[i].clone()).collect(),
            targets: rows.iter().map(|&i| self.targets[i]).collect(),
            kind: self.kind,
            split_label: label.into(),
        }
    }
}

fn check_aligned(pred_inputs: &[Vec<f64>], eval: &EvaluationSet) -> Result<()> {
    if eval.is_empty() {
        return Err(Error::InvalidInput(format!(
            "evaluation set '{}' is empty",
            eval.split_label
        )));
    }
    if pred_inputs != eval.inputs() {
        return Err(Error::Dimension(format!(
            "predictions were not made on the inputs of '{}'",
            eval.split_label
        )));
    }
    Ok(())
}

/// Mean over test points of the log predictive density.
pub fn elpd<P: PredictiveDensity + ?Sized>(pred: &P, eval: &EvaluationSet) -> Result<f64> {
    if eval.kind() != EvalKind::Noisy {
        return Err(Error::InvalidInput(
            "ELPD needs a noisy evaluation set".into(),
        ));
    }
    check_aligned(pred.test_inputs(), eval)?;
    let lp = pred.log_density_points(eval.targets())?;
    Ok(lp.iter().sum::<f64>() / lp.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RmseMode {
    /// Root of the draw average at each point, then averaged over points.
    #[default]
    PointwiseRoot,
    /// Root of the average over all draws and points.
    Global,
}

/// Posterior-averaged RMSE of the predictive means against the truth.
pub fn rmse(pred: &PredictiveDraws, eval: &EvaluationSet) -> Result<f64> {
    rmse_with_mode(pred, eval, RmseMode::PointwiseRoot)
}

pub fn rmse_with_mode(pred: &PredictiveDraws, eval: &EvaluationSet, mode: RmseMode) -> Result<f64> {
    if eval.kind() != EvalKind::Truth {
        return Err(Error::InvalidInput(
            "RMSE needs a truth evaluation set".into(),
        ));
    }
    check_aligned(pred.test_inputs(), eval)?;
    let mu = pred.mu_draws();
    if mu.is_empty() {
        return Err(Error::InvalidInput("no predictive mean draws".into()));
    }
    Ok(rmse_matrix(mu, eval.targets(), mode))
}

/// RMSE of a `[draw][point]` matrix against per-point truth.
pub fn rmse_matrix(mu: &[Vec<f64>], truth: &[f64], mode: RmseMode) -> f64 {
    let s = mu.len() as f64;
    let per_point = truth.iter().enumerate().map(|(i, &t)| {
        mu.iter()
            .map(|row| (row[i] - t) * (row[i] - t))
            .sum::<f64>()
            / s
    });
    let n = truth.len() as f64;
    match mode {
        RmseMode::PointwiseRoot => per_point.map(f64::sqrt).sum::<f64>() / n,
        RmseMode::Global => (per_point.sum::<f64>() / n).sqrt(),
    }
}
