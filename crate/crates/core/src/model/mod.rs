//! Probabilistic model assembly: priors, likelihood families, and the
//! power-scaled and second-step posterior densities.

pub mod density;
mod target;

pub use density::{HalfNormalPrior, NormalPrior, TruncatedNormal};
pub use target::{InferenceTarget, PowerScaledTarget};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{CoefficientVector, MultiIndexSet, ScalingSpec};
use crate::datagen::{RealDataset, SimulationDataset};
use crate::error::{Error, Result};
use density::{normal_logpdf, HALF_LN_2PI};

/// The weighting factor and the likelihood exponents it implies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightingConfig {
    pub beta: f64,
    pub alpha_s: f64,
    pub alpha_r: f64,
}

impl WeightingConfig {
    /// Splits `beta` into the simulation and real-data exponents.
    ///
    /// Below `0.5` the real data keep full weight and the simulation exponent
    /// is `beta / (1 - beta)`; from `0.5` on the roles swap.
    pub fn from_beta(beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::Domain(format!("beta = {beta} lies outside [0, 1]")));
        }
        let (alpha_s, alpha_r) = if beta < 0.5 {
            (beta / (1.0 - beta), 1.0)
        } else {
            (1.0, (1.0 - beta) / beta)
        };
        Ok(Self {
            beta,
            alpha_s,
            alpha_r,
        })
    }

    /// Both sources at full weight, used by the second inference step.
    pub fn real_only() -> Self {
        Self {
            beta: 0.0,
            alpha_s: 0.0,
            alpha_r: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Normal,
    LogNormal,
}

/// Observation model shared by both data sources.
///
/// For `LogNormal` the surrogate output is the log-scale location and
/// observations are shifted by `offset` before evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodFamily {
    pub kind: FamilyKind,
    pub offset: f64,
}

impl LikelihoodFamily {
    pub fn normal() -> Self {
        Self {
            kind: FamilyKind::Normal,
            offset: 0.0,
        }
    }

    pub fn log_normal(offset: f64) -> Self {
        Self {
            kind: FamilyKind::LogNormal,
            offset,
        }
    }

    /// Pointwise log-density of one observation.
    pub fn log_lik(&self, y: f64, mu: f64, sigma: f64) -> Result<f64> {
        match self.kind {
            FamilyKind::Normal => Ok(normal_logpdf(y, mu, sigma)),
            FamilyKind::LogNormal => {
                let shifted = y + self.offset;
                if !(shifted > 0.0) {
                    return Err(Error::Domain(format!(
                        "log-normal observation {y} + offset {} is not positive",
                        self.offset
                    )));
                }
                let ln = shifted.ln();
                Ok(normal_logpdf(ln, mu, sigma) - ln)
            }
        }
    }

    /// Maps observations onto the scale where the likelihood is Gaussian.
    ///
    /// Returns the transformed values and the summed log-Jacobian
    /// (`-sum ln(y + offset)` for `LogNormal`, zero otherwise).
    pub fn transform(&self, y: &[f64]) -> Result<(Vec<f64>, f64)> {
        match self.kind {
            FamilyKind::Normal => Ok((y.to_vec(), 0.0)),
            FamilyKind::LogNormal => {
                let mut z = Vec::with_capacity(y.len());
                let mut jac = 0.0;
                for (i, &v) in y.iter().enumerate() {
                    let shifted = v + self.offset;
                    if !(shifted > 0.0) {
                        return Err(Error::Domain(format!(
                            "observation {i}: {v} + offset {} is not positive under the log-normal likelihood",
                            self.offset
                        )));
                    }
                    let ln = shifted.ln();
                    z.push(ln);
                    jac -= ln;
                }
                Ok((z, jac))
            }
        }
    }

    /// Mean of an observation on the original (unshifted) scale.
    pub fn mean(&self, loc: f64, sigma: f64) -> f64 {
        match self.kind {
            FamilyKind::Normal => loc,
            FamilyKind::LogNormal => (loc + 0.5 * sigma * sigma).exp() - self.offset,
        }
    }

    /// Draws one observation on the original (unshifted) scale.
    pub fn sample<R: Rng + ?Sized>(&self, loc: f64, sigma: f64, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        match self.kind {
            FamilyKind::Normal => loc + sigma * z,
            FamilyKind::LogNormal => (loc + sigma * z).exp() - self.offset,
        }
    }
}

/// Priors on coefficients, the error scale and the latent real-world inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub coeff: NormalPrior,
    pub sigma: HalfNormalPrior,
    /// One truncated normal per latent input; `None` for the data-driven model.
    pub omega: Option<Vec<TruncatedNormal>>,
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.coeff.scale > 0.0) || !(self.sigma.scale > 0.0) {
            return Err(Error::InvalidInput("prior scales must be positive".into()));
        }
        for (k, tn) in self.omega.iter().flatten().enumerate() {
            if !(tn.scale > 0.0) || !(tn.lower < tn.upper) {
                return Err(Error::InvalidInput(format!(
                    "omega prior {k} needs scale > 0 and lower < upper"
                )));
            }
        }
        Ok(())
    }

    pub fn omega_dims(&self) -> usize {
        self.omega.as_ref().map_or(0, Vec::len)
    }

    /// Drops the latent-input prior.
    pub fn without_omega(&self) -> Self {
        Self {
            omega: None,
            ..self.clone()
        }
    }
}

/// A point in parameter space on the constrained scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterState {
    pub coeffs: CoefficientVector,
    pub omega_r: Vec<f64>,
    pub sigma: f64,
}

/// Everything needed to build a surrogate of a given shape.
///
/// A simulation-aware surrogate takes `(x, omega)` jointly; the data-driven
/// variant returned by [`SurrogateSpec::data_driven`] is built over `x` only.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateSpec {
    input_names: Vec<String>,
    omega_names: Vec<String>,
    scaling: ScalingSpec,
    max_degree: usize,
    family: LikelihoodFamily,
    prior: PriorSpec,
    basis: MultiIndexSet,
}

impl SurrogateSpec {
    /// `scaling` covers the known inputs first, then the latent ones.
    pub fn new(
        input_names: Vec<String>,
        omega_names: Vec<String>,
        scaling: ScalingSpec,
        max_degree: usize,
        family: LikelihoodFamily,
        prior: PriorSpec,
    ) -> Result<Self> {
        if input_names.is_empty() {
            return Err(Error::InvalidInput(
                "surrogate needs at least one known input".into(),
            ));
        }
        let dims = input_names.len() + omega_names.len();
        if scaling.dims() != dims {
            return Err(Error::Dimension(format!(
                "scaling covers {} inputs, surrogate has {dims}",
                scaling.dims()
            )));
        }
        if prior.omega_dims() != omega_names.len() {
            return Err(Error::Dimension(format!(
                "{} omega priors for {} latent inputs",
                prior.omega_dims(),
                omega_names.len()
            )));
        }
        prior.validate()?;
        let basis = MultiIndexSet::total_degree(dims, max_degree)?;
        Ok(Self {
            input_names,
            omega_names,
            scaling,
            max_degree,
            family,
            prior,
            basis,
        })
    }

    pub fn data_driven(&self) -> Self {
        let dim_x = self.dim_x();
        let scaling = ScalingSpec::new(self.scaling.bounds()[..dim_x].to_vec())
            .expect("prefix of valid bounds");
        Self::new(
            self.input_names.clone(),
            Vec::new(),
            scaling,
            self.max_degree,
            self.family,
            self.prior.without_omega(),
        )
        .expect("data-driven spec derived from a valid spec")
    }

    pub fn is_data_driven(&self) -> bool {
        self.omega_names.is_empty()
    }

    pub fn dim_x(&self) -> usize {
        self.input_names.len()
    }

    pub fn dim_omega(&self) -> usize {
        self.omega_names.len()
    }

    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub fn omega_names(&self) -> &[String] {
        &self.omega_names
    }

    pub fn scaling(&self) -> &ScalingSpec {
        &self.scaling
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn family(&self) -> LikelihoodFamily {
        self.family
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    pub fn basis(&self) -> &MultiIndexSet {
        &self.basis
    }

    pub fn n_coeffs(&self) -> usize {
        self.basis.len()
    }

    /// Surrogate output (on the likelihood's location scale) at raw inputs.
    pub fn surrogate(&self, coeffs: &[f64], x: &[f64], omega: &[f64]) -> f64 {
        let mut raw = Vec::with_capacity(x.len() + omega.len());
        raw.extend_from_slice(x);
        raw.extend_from_slice(omega);
        let scaled = self.scaling.scale_unchecked(&raw);
        let mut psi = vec![0.0; self.basis.len()];
        self.basis.evaluate(&scaled, &mut psi);
        crate::basis::dot(coeffs, &psi)
    }

    /// Coefficient and parameter names in sampler order.
    pub fn parameter_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.n_coeffs()).map(|i| format!("c{i}")).collect();
        names.extend(self.omega_names.iter().cloned());
        names.push("sigma".into());
        names
    }
}

/// Sum of prior log-densities; `-inf` outside the support.
pub fn log_prior(state: &ParameterState, prior: &PriorSpec) -> f64 {
    let mut lp: f64 = state
        .coeffs
        .0
        .iter()
        .map(|&c| prior.coeff.log_density(c))
        .sum();
    lp += prior.sigma.log_density(state.sigma);
    if let Some(omega) = &prior.omega {
        if omega.len() != state.omega_r.len() {
            return f64::NEG_INFINITY;
        }
        lp += omega
            .iter()
            .zip(&state.omega_r)
            .map(|(tn, &w)| tn.log_density(w))
            .sum::<f64>();
    }
    lp
}

/// Pointwise log-likelihood, see [`LikelihoodFamily::log_lik`].
pub fn log_lik(family: &LikelihoodFamily, y: f64, mu: f64, sigma: f64) -> Result<f64> {
    family.log_lik(y, mu, sigma)
}

/// Power-scaled joint log-posterior on the constrained scale (no Jacobians).
pub fn log_posterior_power_scaled(
    state: &ParameterState,
    sim: &SimulationDataset,
    real: &RealDataset,
    weights: &WeightingConfig,
    spec: &SurrogateSpec,
) -> Result<f64> {
    let target = PowerScaledTarget::new(spec, sim, real, *weights)?;
    target.log_density_constrained(state)
}

/// Second-step log-posterior for fixed coefficients: the full real-data
/// likelihood plus the original prior on the latent inputs and error scale.
pub fn log_posterior_inference(
    omega_r: &[f64],
    sigma: f64,
    coeffs_fixed: &CoefficientVector,
    real: &RealDataset,
    spec: &SurrogateSpec,
) -> Result<f64> {
    let target = InferenceTarget::new(spec, real, coeffs_fixed.clone())?;
    target.log_density_constrained(omega_r, sigma)
}

#[inline]
pub(crate) fn gaussian_point(z: f64, mu: f64, sigma: f64, log_sigma: f64) -> f64 {
    let r = (z - mu) / sigma;
    -HALF_LN_2PI - log_sigma - 0.5 * r * r
}
