//! Training pipelines: data-driven, simulation-based and power-scaled
//! two-step fits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{RealDataset, SimulationDataset};
use crate::error::{Error, Result};
use crate::model::{InferenceTarget, PowerScaledTarget, WeightingConfig};
use crate::predict::{PosteriorRow, PredictiveSource, SourceTag};
use crate::sampler::{
    run_chains, split_rhat, sub_seed, ChainConfig, Diagnostic, Init, LogDensity, PosteriorDraws,
    StageTag,
};

pub use crate::model::SurrogateSpec;

/// Default R-hat threshold.
pub const RHAT_GATE: f64 = 1.05;
/// Pseudo-chain length for diagnosing refined draws.
pub const REFINED_GROUP: usize = 50;
/// Largest tolerated share of failed inner refinement runs.
pub const MAX_DROPPED_FRACTION: f64 = 0.05;

/// Exponents `(alpha_S, alpha_R)` for a weighting factor.
pub fn compute_scaling(beta: f64) -> Result<WeightingConfig> {
    WeightingConfig::from_beta(beta)
}

/// R-hat per parameter for one training stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageDiagnostics {
    pub stage: StageTag,
    pub rhat: Vec<(String, Diagnostic)>,
}

impl StageDiagnostics {
    pub fn from_draws(draws: &PosteriorDraws) -> Self {
        Self {
            stage: draws.stage(),
            rhat: draws
                .parameter_names()
                .iter()
                .cloned()
                .zip(split_rhat(draws))
                .collect(),
        }
    }

    /// Largest R-hat; degenerate parameters count as 1.
    pub fn max_rhat(&self) -> f64 {
        self.rhat
            .iter()
            .map(|(_, d)| d.as_report_value())
            .fold(1.0, |a, b| if b.is_nan() || b > a { b } else { a })
    }

    pub fn passes(&self, gate: f64) -> bool {
        self.rhat.iter().all(|(_, d)| d.passes_rhat_gate(gate))
    }

    /// `Err(NotConverged)` when the gate is set and not met.
    pub fn enforce(&self, gate: Option<f64>) -> Result<()> {
        match gate {
            Some(g) if !self.passes(g) => Err(Error::NotConverged {
                stage: self.stage.as_str().into(),
                gate: g,
                max_rhat: self.max_rhat(),
                rhat: self
                    .rhat
                    .iter()
                    .map(|(n, d)| (n.clone(), d.as_report_value()))
                    .collect(),
            }),
            _ => Ok(()),
        }
    }
}

/// Settings of the second inference step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    /// Settings of each inner run; the last draw of the last chain is kept.
    pub chain: ChainConfig,
    /// Number of stage-1 draws refined, evenly strided over the pooled draws.
    pub thin_to: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl RefineConfig {
    /// One short inner chain per retained draw, 200 draws.
    pub fn desk() -> Self {
        Self {
            chain: ChainConfig {
                n_chains: 1,
                warmup: 200,
                draws_per_chain: 50,
                parallel: false,
                ..ChainConfig::paper()
            },
            thin_to: 200,
        }
    }

    /// Four chains of 1000 + 250 per inner run, every stage-1 draw refined.
    pub fn paper() -> Self {
        Self {
            chain: ChainConfig {
                parallel: false,
                ..ChainConfig::paper()
            },
            thin_to: 1000,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.chain.seed = seed;
        self
    }
}

/// Pooled draw indices `floor(k * n / m)` for `k < m`.
pub fn even_stride(n: usize, m: usize) -> Vec<usize> {
    (0..m).map(|k| k * n / m).collect()
}

/// Posterior of the surrogate trained on real data alone.
#[derive(Debug, Clone, PartialEq)]
pub struct DataDrivenFit {
    spec: SurrogateSpec,
    draws: PosteriorDraws,
    diagnostics: StageDiagnostics,
}

impl DataDrivenFit {
    pub fn spec(&self) -> &SurrogateSpec {
        &self.spec
    }

    pub fn draws(&self) -> &PosteriorDraws {
        &self.draws
    }

    pub fn diagnostics(&self) -> &StageDiagnostics {
        &self.diagnostics
    }

    pub fn max_rhat(&self) -> f64 {
        self.diagnostics.max_rhat()
    }
}

impl PredictiveSource for DataDrivenFit {
    fn spec(&self) -> &SurrogateSpec {
        &self.spec
    }

    fn source_tag(&self) -> SourceTag {
        SourceTag::DataDriven
    }

    fn rows(&self) -> Vec<PosteriorRow> {
        let d = self.spec.n_coeffs();
        self.draws
            .iter_draws()
            .map(|r| PosteriorRow {
                coeffs: r[..d].to_vec(),
                omega: Vec::new(),
                sigma: r[d],
            })
            .collect()
    }
}

/// Trains the surrogate over the known inputs only on real data.
///
/// `spec` may be simulation-aware; its known-input part is used. With
/// `gate = Some(g)` an R-hat above `g` is an error.
pub fn train_data_driven(
    real: &RealDataset,
    spec: &SurrogateSpec,
    cfg: &ChainConfig,
    gate: Option<f64>,
) -> Result<DataDrivenFit> {
    if real.is_empty() {
        return Err(Error::InvalidInput(
            "the data-driven surrogate needs at least one real observation".into(),
        ));
    }
    let target = PowerScaledTarget::data_driven(spec, real)?;
    let run = run_chains(&target, cfg, &Init::Dispersed, StageTag::DataDriven)?;
    let diagnostics = StageDiagnostics::from_draws(&run.draws);
    diagnostics.enforce(gate)?;
    Ok(DataDrivenFit {
        spec: target.spec().clone(),
        draws: run.draws,
        diagnostics,
    })
}

/// Stage-1 draws of `(c, omega', sigma')` from the power-scaled posterior.
pub fn train_power_scaled(
    sim: &SimulationDataset,
    real: &RealDataset,
    beta: f64,
    spec: &SurrogateSpec,
    cfg: &ChainConfig,
    gate: Option<f64>,
) -> Result<PosteriorDraws> {
    let weights = compute_scaling(beta)?;
    if weights.alpha_s > 0.0 && sim.is_empty() {
        return Err(Error::InvalidInput(format!(
            "beta = {beta} weights simulation data but none was given"
        )));
    }
    if weights.alpha_r > 0.0 && real.is_empty() {
        return Err(Error::InvalidInput(format!(
            "beta = {beta} weights real data but none was given"
        )));
    }
    let target = PowerScaledTarget::new(spec, sim, real, weights)?;
    let run = run_chains(&target, cfg, &Init::Dispersed, StageTag::JointTraining)?;
    StageDiagnostics::from_draws(&run.draws).enforce(gate)?;
    Ok(run.draws)
}

/// Which pipeline produced a [`HybridFit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    PowerScaling,
    /// The simulation-based component of the predictive mixture.
    PredictiveWeightingComponents,
}

/// Two-step fit: stage-1 draws and the refined `(omega_R, sigma_R)` rows,
/// each paired with the stage-1 coefficient draw it was conditioned on.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridFit {
    method: FitMethod,
    weighting: WeightingConfig,
    spec: SurrogateSpec,
    joint_draws: PosteriorDraws,
    refined_draws: PosteriorDraws,
    pairs: Vec<usize>,
    dropped: Vec<usize>,
    stage1: StageDiagnostics,
    stage2: StageDiagnostics,
}

impl HybridFit {
    pub fn method(&self) -> FitMethod {
        self.method
    }

    pub fn weighting(&self) -> WeightingConfig {
        self.weighting
    }

    pub fn spec(&self) -> &SurrogateSpec {
        &self.spec
    }

    pub fn joint_draws(&self) -> &PosteriorDraws {
        &self.joint_draws
    }

    /// One chain of refined rows, in pairing order.
    pub fn refined_draws(&self) -> &PosteriorDraws {
        &self.refined_draws
    }

    /// Pooled stage-1 index paired with each refined row.
    pub fn pairs(&self) -> &[usize] {
        &self.pairs
    }

    /// Pooled stage-1 indices whose inner run failed.
    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    pub fn stage1_diagnostics(&self) -> &StageDiagnostics {
        &self.stage1
    }

    pub fn stage2_diagnostics(&self) -> &StageDiagnostics {
        &self.stage2
    }

    pub fn max_rhat(&self) -> f64 {
        self.stage1.max_rhat().max(self.stage2.max_rhat())
    }

    pub fn converged(&self, gate: f64) -> bool {
        self.stage1.passes(gate) && self.stage2.passes(gate)
    }

    /// Paired coefficient draws, one per refined row.
    pub fn paired_coeffs(&self) -> Vec<Vec<f64>> {
        let pooled: Vec<&[f64]> = self.joint_draws.iter_draws().collect();
        let d = self.spec.n_coeffs();
        self.pairs
            .iter()
            .map(|&i| pooled[i][..d].to_vec())
            .collect()
    }

    /// The same fit tagged as a predictive-mixture component.
    pub fn into_component(mut self) -> Self {
        self.method = FitMethod::PredictiveWeightingComponents;
        self
    }
}

impl PredictiveSource for HybridFit {
    fn spec(&self) -> &SurrogateSpec {
        &self.spec
    }

    fn source_tag(&self) -> SourceTag {
        match self.method {
            FitMethod::PredictiveWeightingComponents => SourceTag::SimulationBased,
            FitMethod::PowerScaling if self.weighting.beta >= 1.0 => SourceTag::SimulationBased,
            FitMethod::PowerScaling => SourceTag::PowerScaled,
        }
    }

    fn rows(&self) -> Vec<PosteriorRow> {
        let k = self.spec.dim_omega();
        self.paired_coeffs()
            .into_iter()
            .zip(self.refined_draws.iter_draws())
            .map(|(coeffs, r)| PosteriorRow {
                coeffs,
                omega: r[..k].to_vec(),
                sigma: r[k],
            })
            .collect()
    }
}

/// Second step: for each retained stage-1 draw, samples `(omega_R, sigma_R)`
/// with the coefficients fixed, starting from the paired `(omega', sigma')`,
/// and keeps the final state.
///
/// Inner runs that hit a NaN log-density are dropped; more than 5% dropped
/// is an error. `gate` applies to stage 1 and to the refined rows grouped
/// into pseudo-chains of [`REFINED_GROUP`]. `weighting` records the
/// exponents stage 1 was run with.
pub fn refine_inference(
    joint: &PosteriorDraws,
    weighting: WeightingConfig,
    real: &RealDataset,
    spec: &SurrogateSpec,
    cfg2: &RefineConfig,
    gate: Option<f64>,
) -> Result<HybridFit> {
    if joint.stage() != StageTag::JointTraining {
        return Err(Error::InvalidInput(format!(
            "refinement needs joint-training draws, got {}",
            joint.stage().as_str()
        )));
    }
    if real.is_empty() {
        return Err(Error::InvalidInput(
            "refinement needs real observations".into(),
        ));
    }
    let total = joint.total_draws();
    if cfg2.thin_to == 0 || cfg2.thin_to > total {
        return Err(Error::InvalidInput(format!(
            "thin_to = {} must lie in 1..={total}",
            cfg2.thin_to
        )));
    }
    let d = spec.n_coeffs();
    let k = spec.dim_omega();
    if joint.n_params() != d + k + 1 {
        return Err(Error::Dimension(format!(
            "joint draws have {} parameters, surrogate needs {}",
            joint.n_params(),
            d + k + 1
        )));
    }
    cfg2.chain.validate()?;
    let stage1 = StageDiagnostics::from_draws(joint);
    stage1.enforce(gate)?;

    let pooled: Vec<&[f64]> = joint.iter_draws().collect();
    let indices = even_stride(total, cfg2.thin_to);
    let base = InferenceTarget::new(spec, real, pooled[0][..d].to_vec().into())?;
    let names = base.parameter_names();

    let inner = |(slot, &idx): (usize, &usize)| -> Result<Option<Vec<f64>>> {
        let row = pooled[idx];
        let target = base.with_coeffs(row[..d].to_vec().into())?;
        let start = target.unconstrain(&row[d..d + k], row[d + k]);
        let init = if target.log_density(&start).is_finite() {
            Init::Point(start)
        } else {
            Init::Dispersed
        };
        let mut cfg = cfg2.chain.clone();
        cfg.seed = sub_seed(cfg2.chain.seed, slot as u64);
        match run_chains(&target, &cfg, &init, StageTag::Refinement) {
            Ok(run) => {
                let last = run.draws.samples().last().and_then(|c| c.last()).cloned();
                Ok(last.filter(|v| v.iter().all(|x| x.is_finite())))
            }
            Err(Error::NanLogDensity { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let results: Vec<Result<Option<Vec<f64>>>> =
        indices.par_iter().enumerate().map(inner).collect();

    let mut pairs = Vec::with_capacity(indices.len());
    let mut rows = Vec::with_capacity(indices.len());
    let mut dropped = Vec::new();
    for (res, &idx) in results.into_iter().zip(&indices) {
        match res? {
            Some(r) => {
                pairs.push(idx);
                rows.push(r);
            }
            None => dropped.push(idx),
        }
    }
    if dropped.len() as f64 > MAX_DROPPED_FRACTION * indices.len() as f64 {
        return Err(Error::RefinementDiverged {
            dropped: dropped.len(),
            total: indices.len(),
        });
    }
    let refined_draws = PosteriorDraws::new(names, vec![rows], StageTag::Refinement)?;
    let stage2 = StageDiagnostics::from_draws(&refined_draws.regroup(REFINED_GROUP));
    stage2.enforce(gate)?;
    Ok(HybridFit {
        method: FitMethod::PowerScaling,
        weighting,
        spec: spec.clone(),
        joint_draws: joint.clone(),
        refined_draws,
        pairs,
        dropped,
        stage1,
        stage2,
    })
}

/// Full two-step power-scaling pipeline for one weighting factor.
pub fn train_hybrid(
    sim: &SimulationDataset,
    real: &RealDataset,
    beta: f64,
    spec: &SurrogateSpec,
    cfg: &ChainConfig,
    cfg2: &RefineConfig,
    gate: Option<f64>,
) -> Result<HybridFit> {
    let joint = train_power_scaled(sim, real, beta, spec, cfg, gate)?;
    refine_inference(&joint, compute_scaling(beta)?, real, spec, cfg2, gate)
}

/// The simulation-based pipeline: power scaling at `beta = 1` followed by
/// the second inference step.
pub fn train_simulation_based(
    sim: &SimulationDataset,
    real: &RealDataset,
    spec: &SurrogateSpec,
    cfg: &ChainConfig,
    cfg2: &RefineConfig,
    gate: Option<f64>,
) -> Result<HybridFit> {
    train_hybrid(sim, real, 1.0, spec, cfg, cfg2, gate)
}
