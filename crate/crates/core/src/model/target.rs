//! Posterior densities on an unconstrained parameter vector.
//!
//! Layout: `[c_0 .. c_{d-1}, u_0 .. u_{k-1}, v]` where
//! `omega_j = lo_j + (hi_j - lo_j) * sigmoid(u_j)` and `sigma = exp(v)`.
//! The second-step target drops the coefficients.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::density::HALF_LN_2PI;
use super::{gaussian_point, ParameterState, SurrogateSpec, WeightingConfig};
use crate::basis::{
    dot, legendre_table, BasisWorkspace, CoefficientVector, MultiIndexSet, ScalingSpec,
};
use crate::datagen::{RealDataset, SimulationDataset};
use crate::error::{Error, Result};
use crate::sampler::LogDensity;

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Latent input transform for one truncated-normal prior.
#[derive(Debug, Clone, Copy)]
struct Bounded {
    lo: f64,
    hi: f64,
}

impl Bounded {
    fn constrain(self, u: f64) -> f64 {
        (self.lo + (self.hi - self.lo) * sigmoid(u)).clamp(self.lo, self.hi)
    }

    fn unconstrain(self, w: f64) -> f64 {
        let p = ((w - self.lo) / (self.hi - self.lo)).clamp(1e-12, 1.0 - 1e-12);
        logit(p)
    }

    /// `ln |d omega / d u|`
    fn log_jacobian(self, u: f64) -> f64 {
        (self.hi - self.lo).ln() - softplus(-u) - softplus(u)
    }

    fn dw_du(self, u: f64) -> f64 {
        let s = sigmoid(u);
        (self.hi - self.lo) * s * (1.0 - s)
    }

    /// Derivative of the log-Jacobian with respect to `u`.
    fn dlogjac_du(self, u: f64) -> f64 {
        1.0 - 2.0 * sigmoid(u)
    }
}

/// Real observations with scaled known inputs and Gaussian-scale targets.
#[derive(Debug, Clone)]
struct RealBlock {
    x_scaled: Vec<Vec<f64>>,
    z: Vec<f64>,
    jac: f64,
}

impl RealBlock {
    fn new(spec: &SurrogateSpec, real: &RealDataset) -> Result<Self> {
        let dim_x = spec.dim_x();
        let bounds = spec.scaling().bounds()[..dim_x].to_vec();
        let scaling = ScalingSpec::new(bounds)?;
        let mut x_scaled = Vec::with_capacity(real.len());
        for (i, x) in real.x().iter().enumerate() {
            if x.len() != dim_x {
                return Err(Error::Dimension(format!(
                    "real row {i} has {} inputs, surrogate expects {dim_x}",
                    x.len()
                )));
            }
            x_scaled.push(scaling.scale_point(x)?);
        }
        let (z, jac) = spec.family().transform(real.y())?;
        Ok(Self { x_scaled, z, jac })
    }

    fn len(&self) -> usize {
        self.z.len()
    }

    /// Log-likelihood at fixed latent inputs; accumulates `d/dc`, `d/d omega_scaled`
    /// and `sum r^2 / sigma^2` when `grads` is given.
    #[allow(clippy::too_many_arguments)]
    fn eval(
        &self,
        basis: &MultiIndexSet,
        ws: &mut BasisWorkspace,
        coeffs: &[f64],
        omega_scaled: &[f64],
        sigma: f64,
        log_sigma: f64,
        grads: Option<(Option<&mut [f64]>, &mut [f64], &mut f64)>,
    ) -> f64 {
        let dim_x = self.x_scaled.first().map_or(0, Vec::len);
        let k = omega_scaled.len();
        let wrt: Vec<usize> = (dim_x..dim_x + k).collect();
        let mut point = vec![0.0; dim_x + k];
        point[dim_x..].copy_from_slice(omega_scaled);
        let s2 = sigma * sigma;
        let mut ll = self.jac;
        match grads {
            None => {
                for (x, &z) in self.x_scaled.iter().zip(&self.z) {
                    point[..dim_x].copy_from_slice(x);
                    ws.fill_values(basis, &point);
                    ll += gaussian_point(z, dot(coeffs, &ws.psi), sigma, log_sigma);
                }
            }
            Some((mut gc, gw, r2)) => {
                for (x, &z) in self.x_scaled.iter().zip(&self.z) {
                    point[..dim_x].copy_from_slice(x);
                    ws.fill_with_derivatives(basis, &point, &wrt);
                    let mu = dot(coeffs, &ws.psi);
                    ll += gaussian_point(z, mu, sigma, log_sigma);
                    let r = z - mu;
                    let w = r / s2;
                    *r2 += r * r / s2;
                    if let Some(gc) = gc.as_deref_mut() {
                        for (g, p) in gc.iter_mut().zip(&ws.psi) {
                            *g += w * p;
                        }
                    }
                    for (j, g) in gw.iter_mut().enumerate() {
                        *g += w * dot(coeffs, &ws.dpsi[dim_x + j]);
                    }
                }
            }
        }
        ll
    }
}

/// Real observations with fixed coefficients folded in: at each point the
/// surrogate is a polynomial in the latent inputs alone.
#[derive(Debug, Clone)]
struct ReducedReal {
    /// Distinct latent-input parts of the multi-indices.
    omega_index: Vec<Vec<usize>>,
    /// `[point][m]` weight of latent polynomial `m`.
    weights: Vec<Vec<f64>>,
    z: Vec<f64>,
    jac: f64,
    max_degree: usize,
}

impl ReducedReal {
    fn new(real: &RealBlock, basis: &MultiIndexSet, coeffs: &[f64], dim_x: usize) -> Self {
        let mut omega_index: Vec<Vec<usize>> = Vec::new();
        let slots: Vec<usize> = basis
            .indices()
            .iter()
            .map(|idx| {
                let b = &idx[dim_x..];
                match omega_index.iter().position(|o| o.as_slice() == b) {
                    Some(m) => m,
                    None => {
                        omega_index.push(b.to_vec());
                        omega_index.len() - 1
                    }
                }
            })
            .collect();
        let deg = basis.max_degree();
        let mut vals = vec![0.0; deg + 1];
        let mut ders = vec![0.0; deg + 1];
        let weights = real
            .x_scaled
            .iter()
            .map(|x| {
                let tables: Vec<Vec<f64>> = x
                    .iter()
                    .map(|&xt| {
                        legendre_table(xt, &mut vals, &mut ders);
                        vals.clone()
                    })
                    .collect();
                let mut w = vec![0.0; omega_index.len()];
                for ((idx, &m), &c) in basis.indices().iter().zip(&slots).zip(coeffs) {
                    let px: f64 = idx[..dim_x]
                        .iter()
                        .zip(&tables)
                        .map(|(&a, t)| t[a])
                        .product();
                    w[m] += c * px;
                }
                w
            })
            .collect();
        Self {
            omega_index,
            weights,
            z: real.z.clone(),
            jac: real.jac,
            max_degree: deg,
        }
    }

    fn eval(
        &self,
        omega_scaled: &[f64],
        sigma: f64,
        log_sigma: f64,
        grads: Option<(&mut [f64], &mut f64)>,
    ) -> f64 {
        let k = omega_scaled.len();
        let n = self.max_degree + 1;
        let mut vals = vec![0.0; k * n];
        let mut ders = vec![0.0; k * n];
        for t in 0..k {
            legendre_table(
                omega_scaled[t],
                &mut vals[t * n..(t + 1) * n],
                &mut ders[t * n..(t + 1) * n],
            );
        }
        let m = self.omega_index.len();
        let mut phi = vec![1.0; m];
        for (p, b) in phi.iter_mut().zip(&self.omega_index) {
            for (t, &bt) in b.iter().enumerate() {
                *p *= vals[t * n + bt];
            }
        }
        let s2 = sigma * sigma;
        let mut ll = self.jac;
        match grads {
            None => {
                for (w, &z) in self.weights.iter().zip(&self.z) {
                    ll += gaussian_point(z, dot(w, &phi), sigma, log_sigma);
                }
            }
            Some((gw, r2)) => {
                let mut dphi = vec![0.0; k * m];
                for (mi, b) in self.omega_index.iter().enumerate() {
                    for t in 0..k {
                        let mut d = ders[t * n + b[t]];
                        for (s, &bs) in b.iter().enumerate() {
                            if s != t {
                                d *= vals[s * n + bs];
                            }
                        }
                        dphi[t * m + mi] = d;
                    }
                }
                for (w, &z) in self.weights.iter().zip(&self.z) {
                    let mu = dot(w, &phi);
                    ll += gaussian_point(z, mu, sigma, log_sigma);
                    let r = z - mu;
                    let a = r / s2;
                    *r2 += r * r / s2;
                    for (t, g) in gw.iter_mut().enumerate() {
                        *g += a * dot(w, &dphi[t * m..(t + 1) * m]);
                    }
                }
            }
        }
        ll
    }
}

/// Simulation runs with a precomputed design matrix.
#[derive(Debug, Clone)]
struct SimBlock {
    design: Vec<Vec<f64>>,
    z: Vec<f64>,
    jac: f64,
}

impl SimBlock {
    fn new(spec: &SurrogateSpec, sim: &SimulationDataset) -> Result<Self> {
        let (dx, dw) = (spec.dim_x(), spec.dim_omega());
        let mut design = Vec::with_capacity(sim.len());
        let mut ws = BasisWorkspace::new(spec.basis());
        for (i, (x, w)) in sim.x().iter().zip(sim.omega()).enumerate() {
            if x.len() != dx || w.len() != dw {
                return Err(Error::Dimension(format!(
                    "simulation row {i} has {} + {} inputs, surrogate expects {dx} + {dw}",
                    x.len(),
                    w.len()
                )));
            }
            let mut raw = x.clone();
            raw.extend_from_slice(w);
            let scaled = spec.scaling().scale_point(&raw)?;
            ws.fill_values(spec.basis(), &scaled);
            design.push(ws.psi.clone());
        }
        let (z, jac) = spec.family().transform(sim.y())?;
        Ok(Self { design, z, jac })
    }

    fn eval(
        &self,
        coeffs: &[f64],
        sigma: f64,
        log_sigma: f64,
        grads: Option<(&mut [f64], &mut f64)>,
    ) -> f64 {
        let s2 = sigma * sigma;
        let n = self.z.len() as f64;
        let mut sum_r2 = 0.0;
        match grads {
            None => {
                for (row, &z) in self.design.iter().zip(&self.z) {
                    let r = z - dot(coeffs, row);
                    sum_r2 += r * r;
                }
            }
            Some((gc, r2)) => {
                for (row, &z) in self.design.iter().zip(&self.z) {
                    let r = z - dot(coeffs, row);
                    sum_r2 += r * r;
                    let w = r / s2;
                    for (g, p) in gc.iter_mut().zip(row) {
                        *g += w * p;
                    }
                }
                *r2 += sum_r2 / s2;
            }
        }
        self.jac - n * (HALF_LN_2PI + log_sigma) - 0.5 * sum_r2 / s2
    }
}

/// Power-scaled joint posterior over coefficients, latent inputs and the error scale.
///
/// Terms whose exponent is zero are skipped entirely.
#[derive(Debug, Clone)]
pub struct PowerScaledTarget {
    spec: SurrogateSpec,
    weights: WeightingConfig,
    sim: Option<SimBlock>,
    real: Option<RealBlock>,
    bounded: Vec<Bounded>,
    omega_jac: Vec<f64>,
}

impl PowerScaledTarget {
    pub fn new(
        spec: &SurrogateSpec,
        sim: &SimulationDataset,
        real: &RealDataset,
        weights: WeightingConfig,
    ) -> Result<Self> {
        if spec.is_data_driven() && weights.alpha_s > 0.0 {
            return Err(Error::InvalidInput(
                "the data-driven surrogate cannot use simulation data".into(),
            ));
        }
        let sim = if weights.alpha_s > 0.0 && !sim.is_empty() {
            Some(SimBlock::new(spec, sim)?)
        } else {
            None
        };
        let real = if weights.alpha_r > 0.0 && !real.is_empty() {
            Some(RealBlock::new(spec, real)?)
        } else {
            None
        };
        let bounded = spec
            .prior()
            .omega
            .iter()
            .flatten()
            .map(|tn| Bounded {
                lo: tn.lower,
                hi: tn.upper,
            })
            .collect();
        let dx = spec.dim_x();
        let omega_jac = (0..spec.dim_omega())
            .map(|j| spec.scaling().jacobian(dx + j))
            .collect();
        Ok(Self {
            spec: spec.clone(),
            weights,
            sim,
            real,
            bounded,
            omega_jac,
        })
    }

    /// Posterior of the data-driven surrogate: real data at full weight, no latent inputs.
    pub fn data_driven(spec: &SurrogateSpec, real: &RealDataset) -> Result<Self> {
        let spec = if spec.is_data_driven() {
            spec.clone()
        } else {
            spec.data_driven()
        };
        let empty = SimulationDataset::new(Vec::new(), Vec::new(), Vec::new())?;
        Self::new(&spec, &empty, real, WeightingConfig::real_only())
    }

    pub fn spec(&self) -> &SurrogateSpec {
        &self.spec
    }

    pub fn weights(&self) -> WeightingConfig {
        self.weights
    }

    pub fn n_real(&self) -> usize {
        self.real.as_ref().map_or(0, RealBlock::len)
    }

    fn d(&self) -> usize {
        self.spec.n_coeffs()
    }

    fn k(&self) -> usize {
        self.bounded.len()
    }

    fn omega_scaled(&self, omega: &[f64]) -> Vec<f64> {
        let dx = self.spec.dim_x();
        omega
            .iter()
            .enumerate()
            .map(|(j, &w)| {
                let (lo, hi) = self.spec.scaling().bounds()[dx + j];
                2.0 * (w - lo) / (hi - lo) - 1.0
            })
            .collect()
    }

    /// Log-posterior at a constrained state, without change-of-variable terms.
    pub fn log_density_constrained(&self, state: &ParameterState) -> Result<f64> {
        if state.coeffs.len() != self.d() || state.omega_r.len() != self.k() {
            return Err(Error::Dimension(format!(
                "state has {} coefficients and {} latent inputs, target expects {} and {}",
                state.coeffs.len(),
                state.omega_r.len(),
                self.d(),
                self.k()
            )));
        }
        let mut lp = super::log_prior(state, self.spec.prior());
        if !lp.is_finite() {
            return Ok(lp);
        }
        let sigma = state.sigma;
        let log_sigma = sigma.ln();
        let c = state.coeffs.as_slice();
        if let Some(sim) = &self.sim {
            lp += self.weights.alpha_s * sim.eval(c, sigma, log_sigma, None);
        }
        if let Some(real) = &self.real {
            let mut ws = BasisWorkspace::new(self.spec.basis());
            let wscaled = self.omega_scaled(&state.omega_r);
            lp += self.weights.alpha_r
                * real.eval(
                    self.spec.basis(),
                    &mut ws,
                    c,
                    &wscaled,
                    sigma,
                    log_sigma,
                    None,
                );
        }
        Ok(lp)
    }

    pub fn constrain_state(&self, theta: &[f64]) -> ParameterState {
        let d = self.d();
        ParameterState {
            coeffs: CoefficientVector(theta[..d].to_vec()),
            omega_r: self
                .bounded
                .iter()
                .zip(&theta[d..d + self.k()])
                .map(|(b, &u)| b.constrain(u))
                .collect(),
            sigma: theta[d + self.k()].exp(),
        }
    }

    pub fn unconstrain(&self, state: &ParameterState) -> Vec<f64> {
        let mut theta = state.coeffs.0.clone();
        theta.extend(
            self.bounded
                .iter()
                .zip(&state.omega_r)
                .map(|(b, &w)| b.unconstrain(w)),
        );
        theta.push(state.sigma.ln());
        theta
    }

    fn eval(&self, theta: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let (d, k) = (self.d(), self.k());
        let prior = self.spec.prior();
        let c = &theta[..d];
        let u = &theta[d..d + k];
        let v = theta[d + k];
        let sigma = v.exp();
        let omega: Vec<f64> = self
            .bounded
            .iter()
            .zip(u)
            .map(|(b, &u)| b.constrain(u))
            .collect();
        let tns = prior.omega.as_deref().unwrap_or(&[]);

        let mut lp: f64 = c.iter().map(|&ci| prior.coeff.log_density(ci)).sum();
        lp += prior.sigma.log_density(sigma) + v;
        for ((tn, b), (&w, &uj)) in tns.iter().zip(&self.bounded).zip(omega.iter().zip(u)) {
            lp += tn.log_density(w) + b.log_jacobian(uj);
        }
        if !lp.is_finite() {
            if let Some(g) = grad {
                g.iter_mut().for_each(|x| *x = 0.0);
            }
            return lp;
        }

        let wscaled = self.omega_scaled(&omega);
        match grad {
            None => {
                if let Some(sim) = &self.sim {
                    lp += self.weights.alpha_s * sim.eval(c, sigma, v, None);
                }
                if let Some(real) = &self.real {
                    let mut ws = BasisWorkspace::new(self.spec.basis());
                    lp += self.weights.alpha_r
                        * real.eval(self.spec.basis(), &mut ws, c, &wscaled, sigma, v, None);
                }
                lp
            }
            Some(g) => {
                g.iter_mut().for_each(|x| *x = 0.0);
                let (gc, rest) = g.split_at_mut(d);
                let (gu, gv) = rest.split_at_mut(k);
                for (gi, &ci) in gc.iter_mut().zip(c) {
                    *gi = prior.coeff.grad(ci);
                }
                gv[0] = 1.0 - sigma * sigma / (prior.sigma.scale * prior.sigma.scale);

                if let Some(sim) = &self.sim {
                    let a = self.weights.alpha_s;
                    let mut tmp = vec![0.0; d];
                    let mut r2 = 0.0;
                    lp += a * sim.eval(c, sigma, v, Some((&mut tmp, &mut r2)));
                    for (gi, t) in gc.iter_mut().zip(&tmp) {
                        *gi += a * t;
                    }
                    gv[0] += a * (r2 - sim.z.len() as f64);
                }
                let mut gw = vec![0.0; k];
                if let Some(real) = &self.real {
                    let a = self.weights.alpha_r;
                    let mut ws = BasisWorkspace::new(self.spec.basis());
                    let mut tmp = vec![0.0; d];
                    let mut r2 = 0.0;
                    lp += a * real.eval(
                        self.spec.basis(),
                        &mut ws,
                        c,
                        &wscaled,
                        sigma,
                        v,
                        Some((Some(&mut tmp), &mut gw, &mut r2)),
                    );
                    for (gi, t) in gc.iter_mut().zip(&tmp) {
                        *gi += a * t;
                    }
                    for (j, gwj) in gw.iter_mut().enumerate() {
                        *gwj *= a * self.omega_jac[j];
                    }
                    gv[0] += a * (r2 - real.len() as f64);
                }
                for j in 0..k {
                    let b = self.bounded[j];
                    gu[j] = (tns[j].grad(omega[j]) + gw[j]) * b.dw_du(u[j]) + b.dlogjac_du(u[j]);
                }
                lp
            }
        }
    }
}

impl LogDensity for PowerScaledTarget {
    fn dim(&self) -> usize {
        self.d() + self.k() + 1
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.eval(x, None)
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn log_density_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.eval(x, Some(grad))
    }

    /// Coefficients from `N(0, 0.5)`, latent inputs and the error scale jittered
    /// around their prior medians.
    fn initial_point(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let prior = self.spec.prior();
        let mut theta: Vec<f64> = (0..self.d())
            .map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        for (tn, b) in prior.omega.iter().flatten().zip(&self.bounded) {
            theta.push(b.unconstrain(tn.median()) + rng.random_range(-0.5..0.5));
        }
        theta.push(prior.sigma.median().ln() + rng.random_range(-0.5..0.5));
        theta
    }

    fn parameter_names(&self) -> Vec<String> {
        self.spec.parameter_names()
    }

    fn constrain(&self, x: &[f64]) -> Vec<f64> {
        let s = self.constrain_state(x);
        let mut out = s.coeffs.0;
        out.extend(s.omega_r);
        out.push(s.sigma);
        out
    }
}

/// Second-step posterior over latent inputs and the error scale with the
/// coefficients held fixed: full real-data likelihood, original priors.
#[derive(Debug, Clone)]
pub struct InferenceTarget {
    spec: SurrogateSpec,
    coeffs: CoefficientVector,
    real: RealBlock,
    reduced: ReducedReal,
    bounded: Vec<Bounded>,
    omega_jac: Vec<f64>,
}

impl InferenceTarget {
    pub fn new(
        spec: &SurrogateSpec,
        real: &RealDataset,
        coeffs: CoefficientVector,
    ) -> Result<Self> {
        if coeffs.len() != spec.n_coeffs() {
            return Err(Error::Dimension(format!(
                "{} coefficients for a basis of {}",
                coeffs.len(),
                spec.n_coeffs()
            )));
        }
        if spec.is_data_driven() {
            return Err(Error::InvalidInput(
                "the second step needs latent inputs to infer".into(),
            ));
        }
        let bounded = spec
            .prior()
            .omega
            .iter()
            .flatten()
            .map(|tn| Bounded {
                lo: tn.lower,
                hi: tn.upper,
            })
            .collect();
        let dx = spec.dim_x();
        let omega_jac = (0..spec.dim_omega())
            .map(|j| spec.scaling().jacobian(dx + j))
            .collect();
        let real = RealBlock::new(spec, real)?;
        let reduced = ReducedReal::new(&real, spec.basis(), coeffs.as_slice(), dx);
        Ok(Self {
            spec: spec.clone(),
            coeffs,
            real,
            reduced,
            bounded,
            omega_jac,
        })
    }

    /// Shares the scaled real data with a new coefficient vector.
    pub fn with_coeffs(&self, coeffs: CoefficientVector) -> Result<Self> {
        if coeffs.len() != self.spec.n_coeffs() {
            return Err(Error::Dimension(format!(
                "{} coefficients for a basis of {}",
                coeffs.len(),
                self.spec.n_coeffs()
            )));
        }
        let reduced = ReducedReal::new(
            &self.real,
            self.spec.basis(),
            coeffs.as_slice(),
            self.spec.dim_x(),
        );
        Ok(Self {
            spec: self.spec.clone(),
            coeffs,
            real: self.real.clone(),
            reduced,
            bounded: self.bounded.clone(),
            omega_jac: self.omega_jac.clone(),
        })
    }

    pub fn coeffs(&self) -> &CoefficientVector {
        &self.coeffs
    }

    fn k(&self) -> usize {
        self.bounded.len()
    }

    fn omega_scaled(&self, omega: &[f64]) -> Vec<f64> {
        let dx = self.spec.dim_x();
        omega
            .iter()
            .enumerate()
            .map(|(j, &w)| {
                let (lo, hi) = self.spec.scaling().bounds()[dx + j];
                2.0 * (w - lo) / (hi - lo) - 1.0
            })
            .collect()
    }

    /// Log-posterior at constrained `(omega, sigma)`, without change-of-variable terms.
    pub fn log_density_constrained(&self, omega: &[f64], sigma: f64) -> Result<f64> {
        if omega.len() != self.k() {
            return Err(Error::Dimension(format!(
                "{} latent inputs for a target with {}",
                omega.len(),
                self.k()
            )));
        }
        let prior = self.spec.prior();
        let mut lp = prior.sigma.log_density(sigma);
        for (tn, &w) in prior.omega.iter().flatten().zip(omega) {
            lp += tn.log_density(w);
        }
        if !lp.is_finite() {
            return Ok(lp);
        }
        lp += self
            .reduced
            .eval(&self.omega_scaled(omega), sigma, sigma.ln(), None);
        Ok(lp)
    }

    /// Unconstrained point for constrained `(omega, sigma)`.
    pub fn unconstrain(&self, omega: &[f64], sigma: f64) -> Vec<f64> {
        let mut theta: Vec<f64> = self
            .bounded
            .iter()
            .zip(omega)
            .map(|(b, &w)| b.unconstrain(w))
            .collect();
        theta.push(sigma.ln());
        theta
    }

    fn eval(&self, theta: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let k = self.k();
        let prior = self.spec.prior();
        let tns = prior.omega.as_deref().unwrap_or(&[]);
        let u = &theta[..k];
        let v = theta[k];
        let sigma = v.exp();
        let omega: Vec<f64> = self
            .bounded
            .iter()
            .zip(u)
            .map(|(b, &u)| b.constrain(u))
            .collect();
        let mut lp = prior.sigma.log_density(sigma) + v;
        for ((tn, b), (&w, &uj)) in tns.iter().zip(&self.bounded).zip(omega.iter().zip(u)) {
            lp += tn.log_density(w) + b.log_jacobian(uj);
        }
        if !lp.is_finite() {
            if let Some(g) = grad {
                g.iter_mut().for_each(|x| *x = 0.0);
            }
            return lp;
        }
        let wscaled = self.omega_scaled(&omega);
        match grad {
            None => lp + self.reduced.eval(&wscaled, sigma, v, None),
            Some(g) => {
                let mut gw = vec![0.0; k];
                let mut r2 = 0.0;
                lp += self
                    .reduced
                    .eval(&wscaled, sigma, v, Some((&mut gw, &mut r2)));
                for j in 0..k {
                    let b = self.bounded[j];
                    let dw = gw[j] * self.omega_jac[j];
                    g[j] = (tns[j].grad(omega[j]) + dw) * b.dw_du(u[j]) + b.dlogjac_du(u[j]);
                }
                g[k] = 1.0 - sigma * sigma / (prior.sigma.scale * prior.sigma.scale)
                    + (r2 - self.real.len() as f64);
                lp
            }
        }
    }
}

impl LogDensity for InferenceTarget {
    fn dim(&self) -> usize {
        self.k() + 1
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.eval(x, None)
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn log_density_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.eval(x, Some(grad))
    }

    fn initial_point(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let prior = self.spec.prior();
        let mut theta: Vec<f64> = prior
            .omega
            .iter()
            .flatten()
            .zip(&self.bounded)
            .map(|(tn, b)| b.unconstrain(tn.median()) + rng.random_range(-0.5..0.5))
            .collect();
        theta.push(prior.sigma.median().ln() + rng.random_range(-0.5..0.5));
        theta
    }

    fn parameter_names(&self) -> Vec<String> {
        let mut names = self.spec.omega_names().to_vec();
        names.push("sigma".into());
        names
    }

    fn constrain(&self, x: &[f64]) -> Vec<f64> {
        let k = self.k();
        let mut out: Vec<f64> = self
            .bounded
            .iter()
            .zip(&x[..k])
            .map(|(b, &u)| b.constrain(u))
            .collect();
        out.push(x[k].exp());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::{
        HalfNormalPrior, LikelihoodFamily, NormalPrior, PriorSpec, TruncatedNormal,
    };
    use super::*;
    use crate::basis::legendre;

    fn spec(family: LikelihoodFamily) -> SurrogateSpec {
        SurrogateSpec::new(
            vec!["x".into()],
            vec!["omega".into()],
            ScalingSpec::new(vec![(0.0, 2.0), (0.5, 1.5)]).unwrap(),
            2,
            family,
            PriorSpec {
                coeff: NormalPrior {
                    loc: 0.0,
                    scale: 5.0,
                },
                sigma: HalfNormalPrior { scale: 0.5 },
                omega: Some(vec![TruncatedNormal::new(0.9, 0.05, 0.6, 1.4)]),
            },
        )
        .unwrap()
    }

    fn data() -> (SimulationDataset, RealDataset) {
        let sim = SimulationDataset::new(
            vec![vec![0.1], vec![0.7], vec![1.2], vec![1.9], vec![1.5]],
            vec![vec![0.6], vec![1.0], vec![1.4], vec![0.8], vec![1.1]],
            vec![0.3, 1.2, 2.0, 0.9, 1.6],
        )
        .unwrap();
        let real = RealDataset::new(
            vec![vec![0.2], vec![0.9], vec![1.4], vec![1.0], vec![0.5]],
            vec![0.5, 1.1, 1.7, 1.3, 0.8],
        )
        .unwrap();
        (sim, real)
    }

    /// Direct evaluation with hand-written Legendre products.
    fn naive(state: &ParameterState, w: WeightingConfig, family: LikelihoodFamily) -> f64 {
        let (sim, real) = data();
        let c = &state.coeffs.0;
        // Graded order for 2 inputs, degree 2: 1, P1(a), P1(b), P2(a), P1(a)P1(b), P2(b).
        let f = |x: f64, om: f64| {
            let a = (x - 0.0) / 2.0 * 2.0 - 1.0;
            let b = (om - 0.5) * 2.0 - 1.0;
            let psi = [1.0, a, b, legendre(2, a), a * b, legendre(2, b)];
            c.iter().zip(psi).map(|(c, p)| c * p).sum::<f64>()
        };
        let s = state.sigma;
        let mut lp = c
            .iter()
            .map(|c| {
                NormalPrior {
                    loc: 0.0,
                    scale: 5.0,
                }
                .log_density(*c)
            })
            .sum::<f64>();
        lp += HalfNormalPrior { scale: 0.5 }.log_density(s);
        lp += TruncatedNormal::new(0.9, 0.05, 0.6, 1.4).log_density(state.omega_r[0]);
        let mut ls = 0.0;
        for i in 0..sim.len() {
            ls += family
                .log_lik(sim.y()[i], f(sim.x()[i][0], sim.omega()[i][0]), s)
                .unwrap();
        }
        let mut lr = 0.0;
        for i in 0..real.len() {
            lr += family
                .log_lik(real.y()[i], f(real.x()[i][0], state.omega_r[0]), s)
                .unwrap();
        }
        lp + w.alpha_s * ls + w.alpha_r * lr
    }

    fn state() -> ParameterState {
        ParameterState {
            coeffs: CoefficientVector(vec![1.0, 0.4, -0.3, 0.1, 0.05, -0.02]),
            omega_r: vec![0.93],
            sigma: 0.2,
        }
    }

    #[test]
    fn matches_naive_oracle() {
        let (sim, real) = data();
        for family in [
            LikelihoodFamily::normal(),
            LikelihoodFamily::log_normal(1.0),
        ] {
            let sp = spec(family);
            for beta in [0.0, 0.2, 0.5, 0.8, 1.0] {
                let w = WeightingConfig::from_beta(beta).unwrap();
                let t = PowerScaledTarget::new(&sp, &sim, &real, w).unwrap();
                let got = t.log_density_constrained(&state()).unwrap();
                let want = naive(&state(), w, family);
                assert!((got - want).abs() < 1e-10, "beta {beta}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn exponent_identities() {
        let (sim, real) = data();
        let sp = spec(LikelihoodFamily::normal());
        let st = state();
        let prior = super::super::log_prior(&st, sp.prior());
        let eval = |w: WeightingConfig| {
            PowerScaledTarget::new(&sp, &sim, &real, w)
                .unwrap()
                .log_density_constrained(&st)
                .unwrap()
        };
        let real_only = eval(WeightingConfig::from_beta(0.0).unwrap()) - prior;
        let sim_only = eval(WeightingConfig::from_beta(1.0).unwrap()) - prior;
        let half = eval(WeightingConfig::from_beta(0.5).unwrap()) - prior;
        assert!((half - real_only - sim_only).abs() < 1e-10);
        let sim_naive: f64 = (0..sim.len())
            .map(|i| {
                let mu = sp.surrogate(&st.coeffs.0, &sim.x()[i], &sim.omega()[i]);
                sp.family().log_lik(sim.y()[i], mu, st.sigma).unwrap()
            })
            .sum();
        assert!((sim_only - sim_naive).abs() < 1e-10);
    }

    #[test]
    fn out_of_support_is_neg_infinity() {
        let (sim, real) = data();
        let sp = spec(LikelihoodFamily::normal());
        let t = PowerScaledTarget::new(&sp, &sim, &real, WeightingConfig::from_beta(0.3).unwrap())
            .unwrap();
        let mut st = state();
        st.omega_r[0] = 0.5;
        assert_eq!(t.log_density_constrained(&st).unwrap(), f64::NEG_INFINITY);
        st.omega_r[0] = 0.9;
        st.sigma = -0.1;
        assert_eq!(t.log_density_constrained(&st).unwrap(), f64::NEG_INFINITY);
    }

    fn check_gradient<T: LogDensity>(t: &T, theta: &[f64]) {
        let mut g = vec![0.0; theta.len()];
        t.log_density_gradient(theta, &mut g);
        let lp = t.log_density(theta);
        assert!(lp.is_finite());
        for i in 0..theta.len() {
            let h = 1e-5;
            let mut up = theta.to_vec();
            up[i] += h;
            let mut dn = theta.to_vec();
            dn[i] -= h;
            let fd = (t.log_density(&up) - t.log_density(&dn)) / (2.0 * h);
            let tol = 1e-5 * fd.abs().max(1.0);
            assert!((g[i] - fd).abs() < tol, "component {i}: {} vs {fd}", g[i]);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (sim, real) = data();
        for family in [
            LikelihoodFamily::normal(),
            LikelihoodFamily::log_normal(1.0),
        ] {
            let sp = spec(family);
            for beta in [0.0, 0.3, 0.5, 0.9, 1.0] {
                let t = PowerScaledTarget::new(
                    &sp,
                    &sim,
                    &real,
                    WeightingConfig::from_beta(beta).unwrap(),
                )
                .unwrap();
                let mut theta = t.unconstrain(&state());
                check_gradient(&t, &theta);
                theta[6] = 1.3;
                theta[7] = -0.4;
                check_gradient(&t, &theta);
            }
            let inf = InferenceTarget::new(&sp, &real, state().coeffs).unwrap();
            check_gradient(&inf, &inf.unconstrain(&[0.93], 0.2));
            check_gradient(&inf, &[-0.8, -1.1]);
        }
    }

    #[test]
    fn unconstrained_density_adds_jacobians() {
        let (sim, real) = data();
        let sp = spec(LikelihoodFamily::normal());
        let t = PowerScaledTarget::new(&sp, &sim, &real, WeightingConfig::from_beta(0.4).unwrap())
            .unwrap();
        let st = state();
        let theta = t.unconstrain(&st);
        let b = Bounded { lo: 0.6, hi: 1.4 };
        let u = theta[6];
        let s = sigmoid(u);
        let jac = (0.8 * s * (1.0 - s)).ln() + st.sigma.ln();
        let diff = t.log_density(&theta) - t.log_density_constrained(&st).unwrap();
        assert!((diff - jac).abs() < 1e-9);
        assert!((b.constrain(u) - 0.93).abs() < 1e-12);
        assert_eq!(t.constrain(&theta).len(), t.parameter_names().len());
    }

    #[test]
    fn inference_target_matches_full_likelihood() {
        let (_, real) = data();
        let sp = spec(LikelihoodFamily::normal());
        let st = state();
        let inf = InferenceTarget::new(&sp, &real, st.coeffs.clone()).unwrap();
        let got = inf.log_density_constrained(&st.omega_r, st.sigma).unwrap();
        let mut want = HalfNormalPrior { scale: 0.5 }.log_density(st.sigma)
            + TruncatedNormal::new(0.9, 0.05, 0.6, 1.4).log_density(st.omega_r[0]);
        for i in 0..real.len() {
            let mu = sp.surrogate(&st.coeffs.0, &real.x()[i], &st.omega_r);
            want += sp.family().log_lik(real.y()[i], mu, st.sigma).unwrap();
        }
        assert!((got - want).abs() < 1e-10);
        assert_eq!(
            inf.parameter_names(),
            vec!["omega".to_string(), "sigma".to_string()]
        );
    }

    #[test]
    fn data_driven_target_has_no_latent_inputs() {
        let (_, real) = data();
        let sp = spec(LikelihoodFamily::normal());
        let t = PowerScaledTarget::data_driven(&sp, &real).unwrap();
        assert_eq!(t.dim(), 3 + 1);
        let theta = [0.9, 0.3, -0.1, (0.25f64).ln()];
        check_gradient(&t, &theta);
        let names = t.parameter_names();
        assert_eq!(names, vec!["c0", "c1", "c2", "sigma"]);
    }
}
