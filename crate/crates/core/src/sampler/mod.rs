//! Multi-chain MCMC over unconstrained parameter vectors.
//!
//! Targets implement [`LogDensity`]. With an analytic gradient the default
//! kernel is static Hamiltonian Monte Carlo with jittered trajectory length;
//! otherwise an adaptive random-walk Metropolis kernel is used. Both adapt
//! during warmup and are frozen afterwards.

mod adapt;
pub mod diagnostics;
mod hmc;
mod rwm;

pub use diagnostics::{ess, split_rhat, Diagnostic};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of fresh initial points tried before a chain gives up.
pub const MAX_INIT_ATTEMPTS: usize = 100;

/// A log-density on an unconstrained real vector.
///
/// Implementations must be safe to call from several threads at once.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    fn log_density(&self, x: &[f64]) -> f64;

    /// Whether [`LogDensity::log_density_gradient`] is analytic.
    fn has_gradient(&self) -> bool {
        false
    }

    /// Returns the log-density and writes its gradient into `grad`.
    ///
    /// The default uses central finite differences.
    fn log_density_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let lp = self.log_density(x);
        let mut probe = x.to_vec();
        for i in 0..x.len() {
            let h = 1e-6 * x[i].abs().max(1.0);
            probe[i] = x[i] + h;
            let up = self.log_density(&probe);
            probe[i] = x[i] - h;
            let down = self.log_density(&probe);
            probe[i] = x[i];
            grad[i] = (up - down) / (2.0 * h);
        }
        lp
    }

    /// A random starting point; uniform on `[-2, 2]` per coordinate by default.
    fn initial_point(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..self.dim())
            .map(|_| rng.random_range(-2.0..2.0))
            .collect()
    }

    fn parameter_names(&self) -> Vec<String> {
        (0..self.dim()).map(|i| format!("theta{i}")).collect()
    }

    /// Maps an unconstrained point to the values stored in the draws.
    fn constrain(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adaptation {
    /// Only the step size (or proposal scale) adapts.
    None,
    /// Per-dimension scales from windowed variance estimates.
    DiagonalScale,
    /// Full covariance from windowed estimates.
    DenseCovariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// Hamiltonian when the target has an analytic gradient, else random walk.
    Auto,
    Hamiltonian,
    RandomWalk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    pub n_chains: usize,
    pub warmup: usize,
    pub draws_per_chain: usize,
    pub seed: u64,
    pub adaptation: Adaptation,
    pub kernel: Kernel,
    /// Mean trajectory length in whitened units.
    pub integration_time: f64,
    pub max_leapfrog: usize,
    /// Run chains on the rayon pool.
    pub parallel: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl ChainConfig {
    /// 4 chains of 1000 warmup and 250 kept draws.
    pub fn paper() -> Self {
        Self {
            n_chains: 4,
            warmup: 1000,
            draws_per_chain: 250,
            seed: 0,
            adaptation: Adaptation::DiagonalScale,
            kernel: Kernel::Auto,
            integration_time: 1.5,
            max_leapfrog: 256,
            parallel: true,
        }
    }

    /// 4 chains of 500 warmup and 250 kept draws.
    pub fn desk() -> Self {
        Self {
            warmup: 500,
            ..Self::paper()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 || self.draws_per_chain == 0 {
            return Err(Error::Config(
                "n_chains and draws_per_chain must be positive".into(),
            ));
        }
        if !(self.integration_time > 0.0) || self.max_leapfrog == 0 {
            return Err(Error::Config(
                "integration_time and max_leapfrog must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Where chains start.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Each chain draws from [`LogDensity::initial_point`].
    Dispersed,
    /// Every chain starts at the same unconstrained point.
    Point(Vec<f64>),
    /// One unconstrained point per chain.
    PerChain(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageTag {
    JointTraining,
    Refinement,
    DataDriven,
    /// Draws not tied to a training stage.
    Generic,
}

impl StageTag {
    pub fn as_str(self) -> &'static str {
        match self {
            StageTag::JointTraining => "joint_training",
            StageTag::Refinement => "refinement",
            StageTag::DataDriven => "data_driven",
            StageTag::Generic => "generic",
        }
    }
}

/// Post-warmup draws, indexed `[chain][draw][parameter]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    parameter_names: Vec<String>,
    samples: Vec<Vec<Vec<f64>>>,
    stage: StageTag,
}

impl PosteriorDraws {
    pub fn new(
        parameter_names: Vec<String>,
        samples: Vec<Vec<Vec<f64>>>,
        stage: StageTag,
    ) -> Result<Self> {
        let width = parameter_names.len();
        let n_draws = samples.first().map_or(0, Vec::len);
        for (c, chain) in samples.iter().enumerate() {
            if chain.len() != n_draws {
                return Err(Error::Dimension(format!(
                    "chain {c} has {} draws, expected {n_draws}",
                    chain.len()
                )));
            }
            for (d, row) in chain.iter().enumerate() {
                if row.len() != width {
                    return Err(Error::Dimension(format!(
                        "draw {d} of chain {c} has {} values for {width} names",
                        row.len()
                    )));
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput(format!(
                        "draw {d} of chain {c} is not finite"
                    )));
                }
            }
        }
        Ok(Self {
            parameter_names,
            samples,
            stage,
        })
    }

    pub fn parameter_names(&self) -> &[String] {
        &self.parameter_names
    }

    pub fn samples(&self) -> &[Vec<Vec<f64>>] {
        &self.samples
    }

    pub fn stage(&self) -> StageTag {
        self.stage
    }

    pub fn n_chains(&self) -> usize {
        self.samples.len()
    }

    pub fn n_draws(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn n_params(&self) -> usize {
        self.parameter_names.len()
    }

    pub fn total_draws(&self) -> usize {
        self.n_chains() * self.n_draws()
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.parameter_names.iter().position(|n| n == name)
    }

    /// Per-chain traces of one parameter.
    pub fn chains_for(&self, param: usize) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .map(|c| c.iter().map(|row| row[param]).collect())
            .collect()
    }

    /// All draws in chain-major order.
    pub fn iter_draws(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.iter().flatten().map(Vec::as_slice)
    }

    /// Pooled values of one parameter in chain-major order.
    pub fn pooled(&self, param: usize) -> Vec<f64> {
        self.iter_draws().map(|row| row[param]).collect()
    }

    pub fn mean(&self, param: usize) -> f64 {
        let v = self.pooled(param);
        v.iter().sum::<f64>() / v.len() as f64
    }

    pub fn sd(&self, param: usize) -> f64 {
        let v = self.pooled(param);
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
    }

    /// Keeps a subset of parameters, in the given order.
    pub fn select(&self, params: &[usize]) -> Self {
        Self {
            parameter_names: params
                .iter()
                .map(|&p| self.parameter_names[p].clone())
                .collect(),
            samples: self
                .samples
                .iter()
                .map(|c| {
                    c.iter()
                        .map(|row| params.iter().map(|&p| row[p]).collect())
                        .collect()
                })
                .collect(),
            stage: self.stage,
        }
    }

    /// Regroups pooled draws into consecutive pseudo-chains of `len` draws,
    /// dropping any remainder.
    pub fn regroup(&self, len: usize) -> Self {
        let pooled: Vec<Vec<f64>> = self.iter_draws().map(<[f64]>::to_vec).collect();
        let samples = pooled
            .chunks_exact(len.max(1))
            .map(<[Vec<f64>]>::to_vec)
            .collect();
        Self {
            parameter_names: self.parameter_names.clone(),
            samples,
            stage: self.stage,
        }
    }

    pub fn with_stage(mut self, stage: StageTag) -> Self {
        self.stage = stage;
        self
    }
}

/// Per-chain summary of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainStats {
    /// Mean post-warmup acceptance probability (HMC) or acceptance rate (RWM).
    pub acceptance_rate: f64,
    /// Frozen step size (HMC) or proposal scale (RWM).
    pub step_size: f64,
    pub divergences: usize,
    /// Last unconstrained state.
    pub final_position: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainRun {
    pub draws: PosteriorDraws,
    pub stats: Vec<ChainStats>,
}

impl ChainRun {
    pub fn mean_acceptance(&self) -> f64 {
        self.stats.iter().map(|s| s.acceptance_rate).sum::<f64>() / self.stats.len() as f64
    }
}

/// Derives an independent seed for a numbered stream.
pub fn sub_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) struct ChainOutput {
    pub draws: Vec<Vec<f64>>,
    pub stats: ChainStats,
}

/// Runs `config.n_chains` chains and keeps the post-warmup draws.
pub fn run_chains<T: LogDensity + ?Sized>(
    target: &T,
    config: &ChainConfig,
    init: &Init,
    stage: StageTag,
) -> Result<ChainRun> {
    config.validate()?;
    let dim = target.dim();
    if dim == 0 {
        return Err(Error::InvalidInput("target has zero dimensions".into()));
    }
    let use_gradient = match config.kernel {
        Kernel::Auto => target.has_gradient(),
        Kernel::Hamiltonian => true,
        Kernel::RandomWalk => false,
    };
    if let Init::PerChain(points) = init {
        if points.len() != config.n_chains {
            return Err(Error::Dimension(format!(
                "{} initial points for {} chains",
                points.len(),
                config.n_chains
            )));
        }
    }

    let run_one = |chain: usize| -> Result<ChainOutput> {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, chain as u64));
        let start = initial_state(target, init, chain, &mut rng)?;
        if use_gradient {
            hmc::run(target, config, chain, start, &mut rng)
        } else {
            rwm::run(target, config, chain, start, &mut rng)
        }
    };

    let outputs: Vec<Result<ChainOutput>> = if config.parallel && config.n_chains > 1 {
        (0..config.n_chains).into_par_iter().map(run_one).collect()
    } else {
        (0..config.n_chains).map(run_one).collect()
    };

    let mut samples = Vec::with_capacity(config.n_chains);
    let mut stats = Vec::with_capacity(config.n_chains);
    for out in outputs {
        let out = out?;
        samples.push(out.draws);
        stats.push(out.stats);
    }
    let draws = PosteriorDraws::new(target.parameter_names(), samples, stage)?;
    Ok(ChainRun { draws, stats })
}

fn initial_state<T: LogDensity + ?Sized>(
    target: &T,
    init: &Init,
    chain: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let dim = target.dim();
    let fixed = match init {
        Init::Dispersed => None,
        Init::Point(p) => Some(p),
        Init::PerChain(points) => Some(&points[chain]),
    };
    if let Some(p) = fixed {
        if p.len() != dim {
            return Err(Error::Dimension(format!(
                "initial point has {} values, target has {dim}",
                p.len()
            )));
        }
        let lp = target.log_density(p);
        if lp.is_nan() {
            return Err(Error::NanLogDensity {
                chain,
                iteration: 0,
            });
        }
        if !lp.is_finite() {
            return Err(Error::Initialization { chain, attempts: 1 });
        }
        return Ok(p.clone());
    }
    for _ in 0..MAX_INIT_ATTEMPTS {
        let p = target.initial_point(rng);
        let lp = target.log_density(&p);
        if lp.is_nan() {
            return Err(Error::NanLogDensity {
                chain,
                iteration: 0,
            });
        }
        if lp.is_finite() {
            return Ok(p);
        }
    }
    Err(Error::Initialization {
        chain,
        attempts: MAX_INIT_ATTEMPTS,
    })
}
