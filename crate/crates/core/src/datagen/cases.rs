//! Case-study simulators, synthetic truths and dataset recipes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::negbin::negbin_sample;
use super::sir::{sir_solve, SirConfig};
use super::sobol::sobol_scaled;
use super::{RealDataset, SimulationDataset};
use crate::error::{Error, Result};
use crate::metrics::{EvalKind, EvaluationSet};

pub const CS1_NOISE_SD: f64 = 0.2;
pub const CS21_POPULATION: f64 = 1000.0;
pub const CS21_I0: f64 = 10.0;
pub const CS21_GAMMA_SIM: f64 = 0.55;
pub const CS21_XI_REAL: f64 = 1.6;
pub const CS21_GAMMA_REAL: f64 = 0.7;
pub const CS21_PHI: f64 = 5.0;
/// Per-10^5 population used for the real-data SIR runs.
pub const CS22_POPULATION: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    Normal { sd: f64 },
    NegBinomial { phi: f64 },
}

impl NoiseModel {
    pub fn sample<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> Result<f64> {
        match *self {
            NoiseModel::Normal { sd } => Ok(mean + sd * rng.sample::<f64, _>(StandardNormal)),
            NoiseModel::NegBinomial { phi } => negbin_sample(mean, phi, rng).map(|n| n as f64),
        }
    }
}

/// True unknown inputs of the synthetic real-world process and its noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTruthConfig {
    pub omega_true: Vec<f64>,
    pub noise: NoiseModel,
}

impl SyntheticTruthConfig {
    pub fn cs1() -> Self {
        Self {
            omega_true: vec![1.0],
            noise: NoiseModel::Normal { sd: CS1_NOISE_SD },
        }
    }

    pub fn cs21() -> Self {
        Self {
            omega_true: vec![CS21_XI_REAL, CS21_GAMMA_REAL],
            noise: NoiseModel::NegBinomial { phi: CS21_PHI },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.noise {
            NoiseModel::Normal { sd } => sd > 0.0,
            NoiseModel::NegBinomial { phi } => phi > 0.0,
        };
        if !ok {
            return Err(Error::InvalidInput(
                "noise parameter must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// `omega * ln(x) + 0.01 x + 1`
pub fn cs1_simulator(x: f64, omega: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!(
            "simulator input x = {x} must be positive"
        )));
    }
    Ok(omega * x.ln() + 0.01 * x + 1.0)
}

/// Simulator at `omega = 1` plus the periodic discrepancy `sin(0.05 x)`.
pub fn cs1_truth(x: f64) -> Result<f64> {
    Ok(cs1_simulator(x, 1.0)? + (0.05 * x).sin())
}

/// `n` evenly spaced points including both ends.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Midpoints of `n` equal cells covering `[lo, hi]`.
pub fn cell_midpoints(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * (k as f64 + 0.5) / n as f64)
        .collect()
}

/// One scored test split: indices into the shared input list plus targets.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSplit {
    pub label: String,
    pub indices: Vec<usize>,
    pub noisy: EvaluationSet,
    pub truth: Option<EvaluationSet>,
}

/// All test splits of a case study over one shared list of inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSplits {
    pub inputs: Vec<Vec<f64>>,
    pub splits: Vec<EvalSplit>,
}

impl EvaluationSplits {
    pub fn get(&self, label: &str) -> Option<&EvalSplit> {
        self.splits.iter().find(|s| s.label == label)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.splits.iter().map(|s| s.label.as_str()).collect()
    }

    /// Builds named splits over shared points; `groups` lists the point
    /// indices of each split.
    pub fn from_points(
        inputs: Vec<Vec<f64>>,
        noisy: Vec<f64>,
        truth: Option<Vec<f64>>,
        groups: Vec<(String, Vec<usize>)>,
    ) -> Result<Self> {
        let n = inputs.len();
        if groups.iter().any(|(_, idx)| idx.iter().any(|&i| i >= n)) {
            return Err(Error::Dimension(format!(
                "split index out of range for {n} points"
            )));
        }
        let all_noisy = EvaluationSet::new(inputs.clone(), noisy, EvalKind::Noisy, "all")?;
        let all_truth = truth
            .map(|t| EvaluationSet::new(inputs.clone(), t, EvalKind::Truth, "all"))
            .transpose()?;
        let splits = groups
            .into_iter()
            .map(|(label, idx)| EvalSplit {
                noisy: all_noisy.select(&idx, label.as_str()),
                truth: all_truth.as_ref().map(|t| t.select(&idx, label.as_str())),
                indices: idx,
                label,
            })
            .collect();
        Ok(Self { inputs, splits })
    }

    /// Per-point noisy targets and, when every split has one, the truth.
    pub fn point_values(&self) -> (Vec<f64>, Option<Vec<f64>>) {
        let n = self.inputs.len();
        let mut noisy = vec![f64::NAN; n];
        let mut truth = self
            .splits
            .iter()
            .all(|s| s.truth.is_some())
            .then(|| vec![f64::NAN; n]);
        for s in &self.splits {
            for (k, &i) in s.indices.iter().enumerate() {
                noisy[i] = s.noisy.targets()[k];
                if let (Some(t), Some(st)) = (truth.as_mut(), &s.truth) {
                    t[i] = st.targets()[k];
                }
            }
        }
        (noisy, truth)
    }

    fn single(label: &str, x: Vec<f64>, noisy: Vec<f64>, truth: Option<Vec<f64>>) -> Result<Self> {
        let inputs: Vec<Vec<f64>> = x.into_iter().map(|v| vec![v]).collect();
        let all = (0..inputs.len()).collect();
        Self::from_points(inputs, noisy, truth, vec![(label.into(), all)])
    }

    /// In-distribution and out-of-distribution splits, optionally combined
    /// 1:1 (all points) and 5:1 (every fifth out-of-distribution point).
    fn oos_ood(oos: [Vec<f64>; 3], ood: [Vec<f64>; 3], combined: bool) -> Result<Self> {
        let n_oos = oos[0].len();
        let n_ood = ood[0].len();
        let cat = |i: usize| [oos[i].as_slice(), ood[i].as_slice()].concat();
        let inputs: Vec<Vec<f64>> = cat(0).into_iter().map(|v| vec![v]).collect();
        let mut groups: Vec<(String, Vec<usize>)> = vec![
            ("OOS".into(), (0..n_oos).collect()),
            ("OOD".into(), (n_oos..n_oos + n_ood).collect()),
        ];
        if combined {
            groups.push(("OOS/OOD-1:1".into(), (0..n_oos + n_ood).collect()));
            let mut five = (0..n_oos).collect::<Vec<_>>();
            five.extend((n_oos..n_oos + n_ood).step_by(5));
            groups.push(("OOS/OOD-5:1".into(), five));
        }
        Self::from_points(inputs, cat(1), Some(cat(2)), groups)
    }
}

/// Simulation data, real training data and test splits for one case study.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseStudyData {
    pub sim: SimulationDataset,
    pub real: RealDataset,
    pub eval: EvaluationSplits,
}

/// Layout of the first case study's real-data split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cs1Layout {
    pub train: (f64, f64),
    pub ood: (f64, f64),
}

impl Cs1Layout {
    /// Training on the first half of the input range.
    pub const STANDARD: Self = Self {
        train: (1.0, 100.0),
        ood: (100.0, 200.0),
    };
    /// Training on `[1, 140]`, out-of-distribution tests on `[140, 200]`.
    pub const SHIFTED: Self = Self {
        train: (1.0, 140.0),
        ood: (140.0, 200.0),
    };
}

pub fn make_cs1_datasets(seed: u64) -> Result<CaseStudyData> {
    make_cs1_with_layout(seed, Cs1Layout::STANDARD)
}

pub fn make_cs1_2_datasets(seed: u64) -> Result<CaseStudyData> {
    make_cs1_with_layout(seed, Cs1Layout::SHIFTED)
}

/// 100 Sobol' simulator runs over `x in [1, 200]`, `omega in [0.6, 1.4]`;
/// 30 noisy truth observations on the training range; 100 test points each
/// in and out of distribution.
pub fn make_cs1_with_layout(seed: u64, layout: Cs1Layout) -> Result<CaseStudyData> {
    let pts = sobol_scaled(&[(1.0, 200.0), (0.6, 1.4)], 100)?;
    let mut xs = Vec::with_capacity(pts.len());
    let mut ws = Vec::with_capacity(pts.len());
    let mut ys = Vec::with_capacity(pts.len());
    for p in pts {
        ys.push(cs1_simulator(p[0], p[1])?);
        xs.push(vec![p[0]]);
        ws.push(vec![p[1]]);
    }
    let sim = SimulationDataset::new(xs, ws, ys)?;

    let noise = SyntheticTruthConfig::cs1().noise;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noisy = |x: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        let truth: Vec<f64> = x.iter().map(|&v| cs1_truth(v)).collect::<Result<_>>()?;
        let obs = truth
            .iter()
            .map(|&t| noise.sample(t, &mut rng))
            .collect::<Result<_>>()?;
        Ok((obs, truth))
    };
    let xr = linspace(layout.train.0, layout.train.1, 30);
    let (yr, _) = noisy(&xr)?;
    let real = RealDataset::new(xr.iter().map(|&v| vec![v]).collect(), yr)?;

    let x_oos = cell_midpoints(layout.train.0, layout.train.1, 100);
    let x_ood = cell_midpoints(layout.ood.0, layout.ood.1, 100);
    let (n_oos, t_oos) = noisy(&x_oos)?;
    let (n_ood, t_ood) = noisy(&x_ood)?;
    let eval = EvaluationSplits::oos_ood([x_oos, n_oos, t_oos], [x_ood, n_ood, t_ood], true)?;
    Ok(CaseStudyData { sim, real, eval })
}

/// Infected counts of the synthetic truth over a time grid.
fn cs21_truth(t: &[f64]) -> Result<Vec<f64>> {
    let cfg = SirConfig::new(
        CS21_XI_REAL,
        CS21_GAMMA_REAL,
        CS21_POPULATION,
        CS21_I0,
        t.to_vec(),
    );
    Ok(sir_solve(&cfg)?.i)
}

/// 100 Sobol' SIR runs over `t in [1, 14]`, `xi in [1, 3]` with the recovery
/// rate fixed at 0.55; 30 negative-binomial observations of the
/// `(1.6, 0.7)` truth on `t in [1, 7.5]`; 100 test points in and beyond the
/// training window.
pub fn make_cs21_datasets(seed: u64) -> Result<CaseStudyData> {
    let pts = sobol_scaled(&[(1.0, 14.0), (1.0, 3.0)], 100)?;
    let mut xs = Vec::with_capacity(pts.len());
    let mut ws = Vec::with_capacity(pts.len());
    let mut ys = Vec::with_capacity(pts.len());
    for p in pts {
        let cfg = SirConfig::new(p[1], CS21_GAMMA_SIM, CS21_POPULATION, CS21_I0, vec![p[0]]);
        ys.push(sir_solve(&cfg)?.i[0]);
        xs.push(vec![p[0]]);
        ws.push(vec![p[1]]);
    }
    let sim = SimulationDataset::new(xs, ws, ys)?;

    let noise = SyntheticTruthConfig::cs21().noise;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut observe = |t: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        let truth = cs21_truth(t)?;
        let obs = truth
            .iter()
            .map(|&mu| noise.sample(mu, &mut rng))
            .collect::<Result<_>>()?;
        Ok((obs, truth))
    };
    let tr = linspace(1.0, 7.5, 30);
    let (yr, _) = observe(&tr)?;
    let real = RealDataset::new(tr.iter().map(|&v| vec![v]).collect(), yr)?;

    let t_oos = cell_midpoints(1.0, 7.5, 100);
    let t_ood = cell_midpoints(7.5, 14.0, 100);
    let (n_oos, m_oos) = observe(&t_oos)?;
    let (n_ood, m_ood) = observe(&t_ood)?;
    let eval = EvaluationSplits::oos_ood([t_oos, n_oos, m_oos], [t_ood, n_ood, m_ood], false)?;
    Ok(CaseStudyData { sim, real, eval })
}

/// 1000 Sobol' SIR runs over `t in [0.1, 1.3]`, `xi in [1, 3]`,
/// `gamma in [0.1, 1.0]` on the per-10^5 scale, starting from `i0` infected
/// at `t = 0.1`.
pub fn make_cs22_simulation(i0: f64) -> Result<SimulationDataset> {
    if !(i0 > 0.0) || i0 >= CS22_POPULATION {
        return Err(Error::Domain(format!(
            "initial infected {i0} must lie in (0, {CS22_POPULATION})"
        )));
    }
    let pts = sobol_scaled(&[(0.1, 1.3), (1.0, 3.0), (0.1, 1.0)], 1000)?;
    let mut xs = Vec::with_capacity(pts.len());
    let mut ws = Vec::with_capacity(pts.len());
    let mut ys = Vec::with_capacity(pts.len());
    for p in pts {
        let cfg = SirConfig::new(p[1], p[2], CS22_POPULATION, i0, vec![p[0]]).with_t0(0.1);
        ys.push(sir_solve(&cfg)?.i[0]);
        xs.push(vec![p[0]]);
        ws.push(vec![p[1], p[2]]);
    }
    SimulationDataset::new(xs, ws, ys)
}

/// Real training data plus a noisy test window for the third case study.
pub fn make_cs22_datasets(real: RealDataset, test: EvaluationSet) -> Result<CaseStudyData> {
    let i0 = *real
        .y()
        .first()
        .ok_or_else(|| Error::InvalidInput("no real observations".into()))?;
    let sim = make_cs22_simulation(i0)?;
    let x: Vec<f64> = test.inputs().iter().map(|r| r[0]).collect();
    let eval = EvaluationSplits::single("test", x, test.targets().to_vec(), None)?;
    Ok(CaseStudyData { sim, real, eval })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulator_examples() {
        assert!((cs1_simulator(1.0, 1.0).unwrap() - 1.01).abs() < 1e-12);
        assert!((cs1_simulator(100.0, 1.0).unwrap() - 6.605_170_2).abs() < 1e-7);
        assert!((cs1_simulator(100.0, 0.6).unwrap() - 4.763_102_1).abs() < 1e-7);
        assert!(cs1_simulator(0.0, 1.0).is_err());
        assert!(cs1_truth(-1.0).is_err());
    }

    #[test]
    fn truth_examples() {
        let direct = 100f64.ln() + 2.0 + 5f64.sin();
        assert!((cs1_truth(100.0).unwrap() - direct).abs() < 1e-12);
        assert!((cs1_truth(100.0).unwrap() - 5.646_245_9).abs() < 1e-7);
        let x = 20.0 * std::f64::consts::PI;
        assert!((cs1_truth(x).unwrap() - cs1_simulator(x, 1.0).unwrap()).abs() < 1e-12);
        assert!((cs1_truth(1.0).unwrap() - 1.059_979_2).abs() < 1e-7);
    }

    #[test]
    fn misspecification_amplitude_is_one() {
        let max = (0..=2_000_000)
            .map(|k| 1.0 + 199.0 * k as f64 / 2e6)
            .map(|x| (cs1_truth(x).unwrap() - cs1_simulator(x, 1.0).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-6);
    }

    #[test]
    fn cs1_shapes_and_noise() {
        let d = make_cs1_datasets(0).unwrap();
        assert_eq!(d.sim.len(), 100);
        assert_eq!(d.real.len(), 30);
        assert_eq!(
            d.eval.labels(),
            vec!["OOS", "OOD", "OOS/OOD-1:1", "OOS/OOD-5:1"]
        );
        assert_eq!(d.eval.get("OOS/OOD-1:1").unwrap().noisy.len(), 200);
        assert_eq!(d.eval.get("OOS/OOD-5:1").unwrap().noisy.len(), 120);
        for seed in 0..5 {
            let d = make_cs1_datasets(seed).unwrap();
            let res: Vec<f64> = d
                .real
                .x()
                .iter()
                .zip(d.real.y())
                .map(|(x, y)| y - cs1_truth(x[0]).unwrap())
                .collect();
            let m = res.iter().sum::<f64>() / 30.0;
            let sd = (res.iter().map(|r| (r - m).powi(2)).sum::<f64>() / 29.0).sqrt();
            assert!((0.12..=0.30).contains(&sd), "seed {seed}: {sd}");
        }
        assert_eq!(make_cs1_datasets(3).unwrap(), make_cs1_datasets(3).unwrap());
        assert_ne!(
            make_cs1_datasets(3).unwrap().real,
            make_cs1_datasets(4).unwrap().real
        );
    }

    #[test]
    fn cs1_inputs_respect_bounds() {
        let d = make_cs1_datasets(1).unwrap();
        for (x, w) in d.sim.x().iter().zip(d.sim.omega()) {
            assert!((1.0..=200.0).contains(&x[0]) && (0.6..=1.4).contains(&w[0]));
        }
        let shifted = make_cs1_2_datasets(1).unwrap();
        assert!(shifted.real.x().iter().all(|x| x[0] <= 140.0));
        let ood = shifted.eval.get("OOD").unwrap();
        assert!(ood.noisy.inputs().iter().all(|x| x[0] >= 140.0));
    }

    #[test]
    fn cs21_shapes_and_bounds() {
        let d = make_cs21_datasets(0).unwrap();
        assert_eq!((d.sim.len(), d.real.len()), (100, 30));
        assert!((CS21_GAMMA_REAL - CS21_GAMMA_SIM - 0.15).abs() < 1e-12);
        assert!(d
            .sim
            .y()
            .iter()
            .all(|&i| (0.0..=CS21_POPULATION).contains(&i)));
        for s in &d.eval.splits {
            let t = s.truth.as_ref().unwrap();
            assert!(t
                .targets()
                .iter()
                .all(|&i| (0.0..=CS21_POPULATION).contains(&i)));
        }
        assert_eq!(d.eval.labels(), vec!["OOS", "OOD"]);
        assert_eq!(
            make_cs21_datasets(9).unwrap(),
            make_cs21_datasets(9).unwrap()
        );
    }

    #[test]
    fn cs22_simulation_shape() {
        let sim = make_cs22_simulation(0.4).unwrap();
        assert_eq!(sim.len(), 1000);
        assert_eq!(sim.omega()[0].len(), 2);
        assert!(sim
            .y()
            .iter()
            .all(|&v| (0.0..=CS22_POPULATION).contains(&v)));
        assert!(make_cs22_simulation(0.0).is_err());
    }
}
