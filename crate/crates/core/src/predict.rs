//! Posterior predictive draws, predictive means and the two-component
//! predictive mixture.

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LikelihoodFamily, SurrogateSpec, WeightingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTag {
    SimulationBased,
    DataDriven,
    PowerScaled,
    Mixture,
}

impl SourceTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceTag::SimulationBased => "simulation_based",
            SourceTag::DataDriven => "data_driven",
            SourceTag::PowerScaled => "power_scaled",
            SourceTag::Mixture => "mixture",
        }
    }
}

/// One posterior row: coefficients, latent inputs (empty for data-driven
/// fits) and the error scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorRow {
    pub coeffs: Vec<f64>,
    pub omega: Vec<f64>,
    pub sigma: f64,
}

/// Anything that yields posterior rows for a surrogate.
pub trait PredictiveSource {
    fn spec(&self) -> &SurrogateSpec;
    fn source_tag(&self) -> SourceTag;
    fn rows(&self) -> Vec<PosteriorRow>;
}

/// Scores observations against a predictive distribution.
pub trait PredictiveDensity {
    fn test_inputs(&self) -> &[Vec<f64>];

    /// Per-point log predictive density of `y`.
    fn log_density_points(&self, y: &[f64]) -> Result<Vec<f64>>;
}

/// `log(mean(exp(v)))`, stable for large negative entries.
pub fn log_mean_exp(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NEG_INFINITY;
    }
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = v.iter().map(|x| (x - m).exp()).sum();
    m + (s / v.len() as f64).ln()
}

/// `log(beta e^a + (1 - beta) e^b)` with exact endpoints.
pub fn log_mix2(beta: f64, a: f64, b: f64) -> f64 {
    if beta >= 1.0 {
        return a;
    }
    if beta <= 0.0 {
        return b;
    }
    let la = beta.ln() + a;
    let lb = (1.0 - beta).ln() + b;
    let m = la.max(lb);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((la - m).exp() + (lb - m).exp()).ln()
}

/// Predictive draws on a set of test inputs, indexed `[draw][point]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDraws {
    test_inputs: Vec<Vec<f64>>,
    family: LikelihoodFamily,
    /// Surrogate output per draw and point (location of the likelihood).
    loc: Vec<Vec<f64>>,
    sigma: Vec<f64>,
    y_draws: Vec<Vec<f64>>,
    mu_draws: Vec<Vec<f64>>,
    /// Latent inputs of each draw, kept for plot tagging.
    omega: Vec<Vec<f64>>,
    source: SourceTag,
    labels: Option<Vec<SourceTag>>,
    beyond_bounds: Vec<bool>,
}

impl PredictiveDraws {
    pub fn test_inputs(&self) -> &[Vec<f64>] {
        &self.test_inputs
    }

    pub fn family(&self) -> LikelihoodFamily {
        self.family
    }

    pub fn n_draws(&self) -> usize {
        self.sigma.len()
    }

    pub fn n_points(&self) -> usize {
        self.test_inputs.len()
    }

    pub fn loc(&self) -> &[Vec<f64>] {
        &self.loc
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Sampled observations on the original scale.
    pub fn y_draws(&self) -> &[Vec<f64>] {
        &self.y_draws
    }

    /// Predictive means on the original scale.
    pub fn mu_draws(&self) -> &[Vec<f64>] {
        &self.mu_draws
    }

    pub fn omega(&self) -> &[Vec<f64>] {
        &self.omega
    }

    pub fn source(&self) -> SourceTag {
        self.source
    }

    /// Component of each draw for mixtures.
    pub fn labels(&self) -> Option<&[SourceTag]> {
        self.labels.as_deref()
    }

    /// Test points whose known inputs lie outside the scaling bounds.
    pub fn beyond_bounds(&self) -> &[bool] {
        &self.beyond_bounds
    }

    /// Restricts to the given test points, in order.
    pub fn subset(&self, points: &[usize]) -> Result<Self> {
        if let Some(&bad) = points.iter().find(|&&i| i >= self.n_points()) {
            return Err(Error::Dimension(format!(
                "point {bad} requested from {} test inputs",
                self.n_points()
            )));
        }
        let pick = |m: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            m.iter()
                .map(|row| points.iter().map(|&i| row[i]).collect())
                .collect()
        };
        Ok(Self {
            test_inputs: points
                .iter()
                .map(|&i| self.test_inputs[i].clone())
                .collect(),
            family: self.family,
            loc: pick(&self.loc),
            sigma: self.sigma.clone(),
            y_draws: pick(&self.y_draws),
            mu_draws: pick(&self.mu_draws),
            omega: self.omega.clone(),
            source: self.source,
            labels: self.labels.clone(),
            beyond_bounds: points.iter().map(|&i| self.beyond_bounds[i]).collect(),
        })
    }

    fn take_draws(&self, idx: &[usize]) -> Self {
        Self {
            test_inputs: self.test_inputs.clone(),
            family: self.family,
            loc: idx.iter().map(|&s| self.loc[s].clone()).collect(),
            sigma: idx.iter().map(|&s| self.sigma[s]).collect(),
            y_draws: idx.iter().map(|&s| self.y_draws[s].clone()).collect(),
            mu_draws: idx.iter().map(|&s| self.mu_draws[s].clone()).collect(),
            omega: idx.iter().map(|&s| self.omega[s].clone()).collect(),
            source: self.source,
            labels: self
                .labels
                .as_ref()
                .map(|l| idx.iter().map(|&s| l[s]).collect()),
            beyond_bounds: self.beyond_bounds.clone(),
        }
    }

    fn concat(a: Self, b: Self, labels: Vec<SourceTag>) -> Self {
        let mut out = a;
        out.loc.extend(b.loc);
        out.sigma.extend(b.sigma);
        out.y_draws.extend(b.y_draws);
        out.mu_draws.extend(b.mu_draws);
        out.omega.extend(b.omega);
        out.source = SourceTag::Mixture;
        out.labels = Some(labels);
        out
    }

    /// Empirical quantiles of the observation draws at each point.
    pub fn y_quantiles(&self, probs: &[f64]) -> Vec<Vec<f64>> {
        column_quantiles(&self.y_draws, probs)
    }

    /// Empirical quantiles of the mean draws at each point.
    pub fn mu_quantiles(&self, probs: &[f64]) -> Vec<Vec<f64>> {
        column_quantiles(&self.mu_draws, probs)
    }
}

/// Linear-interpolation quantiles per column of a `[draw][point]` matrix.
fn column_quantiles(m: &[Vec<f64>], probs: &[f64]) -> Vec<Vec<f64>> {
    let n_points = m.first().map_or(0, Vec::len);
    (0..n_points)
        .map(|i| {
            let mut col: Vec<f64> = m.iter().map(|r| r[i]).collect();
            col.sort_by(f64::total_cmp);
            probs.iter().map(|&p| quantile_sorted(&col, p)).collect()
        })
        .collect()
}

pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl PredictiveDensity for PredictiveDraws {
    fn test_inputs(&self) -> &[Vec<f64>] {
        &self.test_inputs
    }

    fn log_density_points(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n_points() {
            return Err(Error::Dimension(format!(
                "{} observations for {} test points",
                y.len(),
                self.n_points()
            )));
        }
        let mut per_draw = vec![0.0; self.n_draws()];
        let mut out = Vec::with_capacity(y.len());
        for (i, &yi) in y.iter().enumerate() {
            for (s, v) in per_draw.iter_mut().enumerate() {
                *v = self.family.log_lik(yi, self.loc[s][i], self.sigma[s])?;
            }
            out.push(log_mean_exp(&per_draw));
        }
        Ok(out)
    }
}

/// Predictive draws from posterior rows at `test_x`.
pub fn predictive_draws<S: PredictiveSource + ?Sized>(
    fit: &S,
    test_x: &[Vec<f64>],
    seed: u64,
) -> Result<PredictiveDraws> {
    predictive_from_rows(fit.spec(), &fit.rows(), fit.source_tag(), test_x, seed)
}

/// Predictive draws from explicit rows.
pub fn predictive_from_rows(
    spec: &SurrogateSpec,
    rows: &[PosteriorRow],
    source: SourceTag,
    test_x: &[Vec<f64>],
    seed: u64,
) -> Result<PredictiveDraws> {
    if rows.is_empty() {
        return Err(Error::InvalidInput(
            "no posterior rows to predict from".into(),
        ));
    }
    let dim_x = spec.dim_x();
    for (i, x) in test_x.iter().enumerate() {
        if x.len() != dim_x {
            return Err(Error::Dimension(format!(
                "test input {i} has {} values, surrogate expects {dim_x}",
                x.len()
            )));
        }
    }
    let bounds = &spec.scaling().bounds()[..dim_x];
    let beyond_bounds = test_x
        .iter()
        .map(|x| x.iter().zip(bounds).any(|(&v, &(lo, hi))| v < lo || v > hi))
        .collect();
    let family = spec.family();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut loc = Vec::with_capacity(rows.len());
    let mut y_draws = Vec::with_capacity(rows.len());
    let mut mu_draws = Vec::with_capacity(rows.len());
    for (s, row) in rows.iter().enumerate() {
        if row.coeffs.len() != spec.n_coeffs() || row.omega.len() != spec.dim_omega() {
            return Err(Error::Dimension(format!(
                "posterior row {s} does not match the surrogate shape"
            )));
        }
        let mut l = Vec::with_capacity(test_x.len());
        let mut yv = Vec::with_capacity(test_x.len());
        let mut mv = Vec::with_capacity(test_x.len());
        for (i, x) in test_x.iter().enumerate() {
            let m = spec.surrogate(&row.coeffs, x, &row.omega);
            if !m.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "surrogate output is not finite for draw {s} at test point {i}"
                )));
            }
            l.push(m);
            mv.push(family.mean(m, row.sigma));
            yv.push(family.sample(m, row.sigma, &mut rng));
        }
        loc.push(l);
        y_draws.push(yv);
        mu_draws.push(mv);
    }
    Ok(PredictiveDraws {
        test_inputs: test_x.to_vec(),
        family,
        loc,
        sigma: rows.iter().map(|r| r.sigma).collect(),
        y_draws,
        mu_draws,
        omega: rows.iter().map(|r| r.omega.clone()).collect(),
        source,
        labels: None,
        beyond_bounds,
    })
}

/// Weighted mixture of a simulation-based and a data-driven predictive.
///
/// Scoring uses the exact two-component density; [`MixturePredictive::samples`]
/// is a labeled subsample with `round(beta * total)` simulation-based draws.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePredictive {
    beta: f64,
    sim: PredictiveDraws,
    dd: PredictiveDraws,
    samples: PredictiveDraws,
}

impl MixturePredictive {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sim(&self) -> &PredictiveDraws {
        &self.sim
    }

    pub fn data_driven(&self) -> &PredictiveDraws {
        &self.dd
    }

    pub fn samples(&self) -> &PredictiveDraws {
        &self.samples
    }

    pub fn subset(&self, points: &[usize]) -> Result<Self> {
        Ok(Self {
            beta: self.beta,
            sim: self.sim.subset(points)?,
            dd: self.dd.subset(points)?,
            samples: self.samples.subset(points)?,
        })
    }
}

impl PredictiveDensity for MixturePredictive {
    fn test_inputs(&self) -> &[Vec<f64>] {
        self.sim.test_inputs()
    }

    fn log_density_points(&self, y: &[f64]) -> Result<Vec<f64>> {
        if self.beta >= 1.0 {
            return self.sim.log_density_points(y);
        }
        if self.beta <= 0.0 {
            return self.dd.log_density_points(y);
        }
        let a = self.sim.log_density_points(y)?;
        let b = self.dd.log_density_points(y)?;
        Ok(a.iter()
            .zip(&b)
            .map(|(&a, &b)| log_mix2(self.beta, a, b))
            .collect())
    }
}

fn pick_rows(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if k == n {
        return (0..n).collect();
    }
    if k < n {
        let mut idx = sample_indices(rng, n, k).into_vec();
        idx.sort_unstable();
        idx
    } else {
        (0..k).map(|_| rng.random_range(0..n)).collect()
    }
}

/// Combines two predictives with weight `beta` on the simulation-based one.
pub fn mixture_predictive(
    sim_pred: &PredictiveDraws,
    dd_pred: &PredictiveDraws,
    beta: f64,
    total_draws: usize,
    seed: u64,
) -> Result<MixturePredictive> {
    WeightingConfig::from_beta(beta)?;
    if sim_pred.test_inputs != dd_pred.test_inputs {
        return Err(Error::Dimension(
            "mixture components were evaluated on different test inputs".into(),
        ));
    }
    if total_draws == 0 {
        return Err(Error::InvalidInput(
            "mixture needs at least one draw".into(),
        ));
    }
    let k = (beta * total_draws as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = sim_pred.take_draws(&pick_rows(sim_pred.n_draws(), k, &mut rng));
    let b = dd_pred.take_draws(&pick_rows(dd_pred.n_draws(), total_draws - k, &mut rng));
    let mut labels = vec![SourceTag::SimulationBased; k];
    labels.extend(std::iter::repeat_n(SourceTag::DataDriven, total_draws - k));
    let samples = PredictiveDraws::concat(a, b, labels);
    Ok(MixturePredictive {
        beta,
        sim: sim_pred.clone(),
        dd: dd_pred.clone(),
        samples,
    })
}

/// Per-point log predictive density for any provider.
pub fn predictive_density<P: PredictiveDensity + ?Sized>(
    pred: &P,
    y_obs: &[f64],
) -> Result<Vec<f64>> {
    pred.log_density_points(y_obs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::ScalingSpec;
    use crate::model::density::normal_logpdf;
    use crate::model::{HalfNormalPrior, NormalPrior, PriorSpec, TruncatedNormal};

    fn spec(family: LikelihoodFamily) -> SurrogateSpec {
        SurrogateSpec::new(
            vec!["x".into()],
            vec!["omega".into()],
            ScalingSpec::new(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap(),
            1,
            family,
            PriorSpec {
                coeff: NormalPrior {
                    loc: 0.0,
                    scale: 5.0,
                },
                sigma: HalfNormalPrior { scale: 0.5 },
                omega: Some(vec![TruncatedNormal::new(0.5, 0.1, 0.0, 1.0)]),
            },
        )
        .unwrap()
    }

    fn const_rows(value: f64, sigma: f64, n: usize) -> Vec<PosteriorRow> {
        // c0 * 1 + c1 * P1(x) + c2 * P1(omega) with only c0 set.
        vec![
            PosteriorRow {
                coeffs: vec![value, 0.0, 0.0],
                omega: vec![0.5],
                sigma,
            };
            n
        ]
    }

    fn xs(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![(i as f64 + 0.5) / n as f64]).collect()
    }

    #[test]
    fn log_mean_exp_examples() {
        assert!((log_mean_exp(&[-1.0, -3.0]) - (-1.566_219_2)).abs() < 1e-7);
        let exact = ((-1f64).exp() + (-3f64).exp()) / 2.0;
        assert!((log_mean_exp(&[-1.0, -3.0]) - exact.ln()).abs() < 1e-15);
    }

    #[test]
    fn log_mean_exp_extreme_values() {
        let v: Vec<f64> = (0..500)
            .map(|i| -700.0 + (i as f64) * 0.37 - 150.0 * ((i % 7) as f64))
            .collect();
        // Reference: shift by a fixed constant and sum in order.
        let shift = -700.0 + 499.0 * 0.37;
        let s: f64 = v.iter().map(|x| (x - shift).exp()).sum();
        let reference = shift + (s / 500.0).ln();
        assert!(log_mean_exp(&v).is_finite());
        assert!((log_mean_exp(&v) - reference).abs() < 1e-12);
    }

    #[test]
    fn single_draw_normal_density() {
        let sp = spec(LikelihoodFamily::normal());
        let p = predictive_from_rows(
            &sp,
            &const_rows(2.0, 1.0, 1),
            SourceTag::DataDriven,
            &xs(1),
            0,
        )
        .unwrap();
        let ld = p.log_density_points(&[2.0]).unwrap();
        assert!((ld[0] - (-0.918_938_5)).abs() < 1e-7);
    }

    #[test]
    fn zero_noise_collapses_observations() {
        let sp = spec(LikelihoodFamily::normal());
        let p = predictive_from_rows(
            &sp,
            &const_rows(1.0, 1e-12, 20),
            SourceTag::DataDriven,
            &xs(5),
            3,
        )
        .unwrap();
        for (y, m) in p.y_draws().iter().zip(p.mu_draws()) {
            for (a, b) in y.iter().zip(m) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn log_normal_mean() {
        let sp = spec(LikelihoodFamily::log_normal(0.0));
        let p = predictive_from_rows(
            &sp,
            &const_rows(0.0, 1.0, 1),
            SourceTag::DataDriven,
            &xs(1),
            0,
        )
        .unwrap();
        assert!((p.mu_draws()[0][0] - 0.5f64.exp()).abs() < 1e-15);
        assert!((p.mu_draws()[0][0] - 1.64872).abs() < 1e-5);
        let sp1 = spec(LikelihoodFamily::log_normal(1.0));
        let p1 = predictive_from_rows(
            &sp1,
            &const_rows(0.0, 1.0, 1),
            SourceTag::DataDriven,
            &xs(1),
            0,
        )
        .unwrap();
        assert!((p1.mu_draws()[0][0] - (0.5f64.exp() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn normal_observation_spread() {
        let sp = spec(LikelihoodFamily::normal());
        let p = predictive_from_rows(
            &sp,
            &const_rows(1.0, 0.2, 10_000),
            SourceTag::DataDriven,
            &xs(1),
            8,
        )
        .unwrap();
        let ys: Vec<f64> = p.y_draws().iter().map(|r| r[0]).collect();
        let m = ys.iter().sum::<f64>() / ys.len() as f64;
        let sd = (ys.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (ys.len() as f64 - 1.0)).sqrt();
        assert!((sd - 0.2).abs() / 0.2 < 0.03);
        // Mean of observations against mean of predictive means.
        assert!((m - 1.0).abs() < 4.0 * 0.2 / (ys.len() as f64).sqrt());
    }

    #[test]
    fn log_normal_observation_mean_matches_predictive_mean() {
        let sp = spec(LikelihoodFamily::log_normal(1.0));
        let p = predictive_from_rows(
            &sp,
            &const_rows(1.5, 0.3, 20_000),
            SourceTag::DataDriven,
            &xs(1),
            12,
        )
        .unwrap();
        let ys: Vec<f64> = p.y_draws().iter().map(|r| r[0]).collect();
        let n = ys.len() as f64;
        let m = ys.iter().sum::<f64>() / n;
        let sd = (ys.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let mu = p.mu_draws()[0][0];
        assert!((m - mu).abs() < 4.0 * sd / n.sqrt());
    }

    fn two_normals() -> (PredictiveDraws, PredictiveDraws) {
        let sp = spec(LikelihoodFamily::normal());
        let x = xs(3);
        let a = predictive_from_rows(
            &sp,
            &const_rows(0.0, 1.0, 4),
            SourceTag::SimulationBased,
            &x,
            1,
        )
        .unwrap();
        let b = predictive_from_rows(&sp, &const_rows(1.0, 1.0, 6), SourceTag::DataDriven, &x, 2)
            .unwrap();
        (a, b)
    }

    #[test]
    fn mixture_density_example() {
        let (a, b) = two_normals();
        let mix = mixture_predictive(&a, &b, 0.4, 10, 0).unwrap();
        let ld = mix.log_density_points(&[0.0, 0.0, 0.0]).unwrap();
        assert!((ld[0].exp() - 0.304_760).abs() < 1e-6);
        let direct =
            0.4 * normal_logpdf(0.0, 0.0, 1.0).exp() + 0.6 * normal_logpdf(0.0, 1.0, 1.0).exp();
        assert!((ld[1] - direct.ln()).abs() < 1e-14);
        assert_eq!(mix.samples().n_draws(), 10);
        let labels = mix.samples().labels().unwrap();
        assert_eq!(
            labels
                .iter()
                .filter(|&&l| l == SourceTag::SimulationBased)
                .count(),
            4
        );
    }

    #[test]
    fn mixture_endpoints_reduce_to_components() {
        let (a, b) = two_normals();
        let y = [0.3, -0.2, 1.7];
        let one = mixture_predictive(&a, &b, 1.0, 4, 5).unwrap();
        assert_eq!(
            one.log_density_points(&y).unwrap(),
            a.log_density_points(&y).unwrap()
        );
        assert_eq!(one.samples().y_draws(), a.y_draws());
        let zero = mixture_predictive(&a, &b, 0.0, 6, 5).unwrap();
        assert_eq!(
            zero.log_density_points(&y).unwrap(),
            b.log_density_points(&y).unwrap()
        );
        assert_eq!(zero.samples().y_draws(), b.y_draws());
    }

    #[test]
    fn mixture_bounded_below_by_weighted_components() {
        let (a, b) = two_normals();
        let y = [0.3, -2.0, 4.0];
        for beta in [0.1, 0.4, 0.9] {
            let mix = mixture_predictive(&a, &b, beta, 10, 5).unwrap();
            let m = mix.log_density_points(&y).unwrap();
            let la = a.log_density_points(&y).unwrap();
            let lb = b.log_density_points(&y).unwrap();
            for i in 0..3 {
                assert!(m[i] >= beta.ln() + la[i]);
                assert!(m[i] >= (1.0 - beta).ln() + lb[i]);
            }
        }
    }

    #[test]
    fn mixture_density_integrates_to_one() {
        let (a, b) = two_normals();
        let mix = mixture_predictive(&a, &b, 0.3, 10, 5).unwrap();
        let (lo, hi, n) = (-12.0, 13.0, 5000);
        let h = (hi - lo) / n as f64;
        let mut total = [0.0; 3];
        for k in 0..=n {
            let y = lo + k as f64 * h;
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            let ld = mix.log_density_points(&[y, y, y]).unwrap();
            for i in 0..3 {
                total[i] += w * h * ld[i].exp();
            }
        }
        for t in total {
            assert!((t - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn mixture_rejects_mismatched_grids() {
        let (a, _) = two_normals();
        let sp = spec(LikelihoodFamily::normal());
        let c = predictive_from_rows(
            &sp,
            &const_rows(1.0, 1.0, 2),
            SourceTag::DataDriven,
            &xs(4),
            2,
        )
        .unwrap();
        assert!(mixture_predictive(&a, &c, 0.5, 4, 0).is_err());
        assert!(mixture_predictive(&a, &a, 1.5, 4, 0).is_err());
    }

    #[test]
    fn log_normal_density_rejects_nonpositive_shift() {
        let sp = spec(LikelihoodFamily::log_normal(1.0));
        let p = predictive_from_rows(
            &sp,
            &const_rows(0.0, 1.0, 2),
            SourceTag::DataDriven,
            &xs(1),
            0,
        )
        .unwrap();
        assert!(matches!(
            p.log_density_points(&[-1.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn deterministic_and_flags_out_of_bounds() {
        let sp = spec(LikelihoodFamily::normal());
        let x = vec![vec![0.5], vec![1.5]];
        let a = predictive_from_rows(&sp, &const_rows(0.0, 1.0, 3), SourceTag::DataDriven, &x, 7)
            .unwrap();
        let b = predictive_from_rows(&sp, &const_rows(0.0, 1.0, 3), SourceTag::DataDriven, &x, 7)
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.beyond_bounds(), &[false, true]);
    }
}
