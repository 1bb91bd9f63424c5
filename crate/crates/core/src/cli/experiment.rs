//! Sweeps over weighting factors and seeds, scoring and run artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Fusion};
use super::io::{
    cache_key, create_dir, load_datasets, load_draws, load_table, read_cache, save_datasets,
    save_draws, save_table, write_cache,
};
use super::CaseStudy;
use crate::datagen::{linspace, CaseStudyData};
use crate::error::{Error, Result};
use crate::metrics::{elpd, rmse};
use crate::model::SurrogateSpec;
use crate::predict::{
    mixture_predictive, predictive_draws, PosteriorRow, PredictiveDraws, PredictiveSource,
    SourceTag,
};
use crate::sampler::{sub_seed, PosteriorDraws, StageTag};
use crate::train::{
    train_data_driven, train_hybrid, DataDrivenFit, HybridFit, StageDiagnostics, REFINED_GROUP,
};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "HYBRID_SURROGATE_THREADS";
/// Quantile levels of the predictive tables.
pub const QUANTILES: [f64; 5] = [0.025, 0.25, 0.5, 0.75, 0.975];
/// Points of the plotting grid over the first known input.
pub const PLOT_POINTS: usize = 200;

const DD_STREAM: u64 = 2;
const PREDICT_STREAM: u64 = 3;
const MIXTURE_STREAM: u64 = 4;

/// One score of one fit on one test split.
///
/// `rmse` is empty for splits without noise-free truth; `converged` is false
/// when any stage exceeds the R-hat gate or training failed (`error`).
/// Wall time is kept in `timings.csv` so the result table is reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub case_study: CaseStudy,
    pub method: Fusion,
    pub beta: f64,
    pub split: String,
    pub seed: u64,
    pub elpd: f64,
    pub rmse: Option<f64>,
    pub rhat_max: f64,
    pub converged: bool,
    pub error: Option<String>,
    #[serde(skip)]
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub method: Fusion,
    pub beta: f64,
    pub seed: u64,
    pub wall_time_seconds: f64,
}

/// A trained component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    DataDriven,
    /// Two-step power scaling; `1.0` is the simulation-based surrogate.
    PowerScaled(f64),
}

impl Component {
    fn stream(self) -> u64 {
        match self {
            Component::DataDriven => DD_STREAM,
            Component::PowerScaled(b) => b.to_bits(),
        }
    }

    fn file_stem(self, seed: u64) -> String {
        match self {
            Component::DataDriven => format!("s{seed}_dd"),
            Component::PowerScaled(b) => format!("s{seed}_ps_b{b:.4}"),
        }
    }
}

/// Posterior rows of a trained component, with the draws needed to
/// recompute its convergence diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredFit {
    spec: SurrogateSpec,
    tag: SourceTag,
    joint: Option<PosteriorDraws>,
    rows: PosteriorDraws,
}

impl StoredFit {
    pub fn from_data_driven(fit: &DataDrivenFit) -> Self {
        Self {
            spec: fit.spec().clone(),
            tag: SourceTag::DataDriven,
            joint: None,
            rows: fit.draws().clone(),
        }
    }

    pub fn from_hybrid(fit: &HybridFit) -> Result<Self> {
        let rows = fit.rows();
        let samples = vec![rows
            .iter()
            .map(|r| {
                let mut v = r.coeffs.clone();
                v.extend_from_slice(&r.omega);
                v.push(r.sigma);
                v
            })
            .collect()];
        Ok(Self {
            spec: fit.spec().clone(),
            tag: fit.source_tag(),
            joint: Some(fit.joint_draws().clone()),
            rows: PosteriorDraws::new(fit.spec().parameter_names(), samples, StageTag::Refinement)?,
        })
    }

    /// Rebuilds a fit from persisted draw sets.
    pub fn from_draws(
        spec: &SurrogateSpec,
        component: Component,
        sets: Vec<PosteriorDraws>,
    ) -> Result<Self> {
        let bad = || Error::InvalidInput("draw sets do not match the component".into());
        match component {
            Component::DataDriven => {
                let [rows]: [PosteriorDraws; 1] = sets.try_into().map_err(|_| bad())?;
                let spec = spec.data_driven();
                if rows.stage() != StageTag::DataDriven
                    || rows.parameter_names() != spec.parameter_names()
                {
                    return Err(bad());
                }
                Ok(Self {
                    spec,
                    tag: SourceTag::DataDriven,
                    joint: None,
                    rows,
                })
            }
            Component::PowerScaled(beta) => {
                let [joint, rows]: [PosteriorDraws; 2] = sets.try_into().map_err(|_| bad())?;
                if joint.stage() != StageTag::JointTraining
                    || rows.stage() != StageTag::Refinement
                    || rows.parameter_names() != spec.parameter_names()
                {
                    return Err(bad());
                }
                let tag = if beta >= 1.0 {
                    SourceTag::SimulationBased
                } else {
                    SourceTag::PowerScaled
                };
                Ok(Self {
                    spec: spec.clone(),
                    tag,
                    joint: Some(joint),
                    rows: rows.with_stage(StageTag::Refinement),
                })
            }
        }
    }

    pub fn draw_sets(&self) -> Vec<&PosteriorDraws> {
        self.joint.iter().chain([&self.rows]).collect()
    }

    /// Per-stage diagnostics; refined rows are grouped into pseudo-chains.
    pub fn diagnostics(&self) -> Vec<StageDiagnostics> {
        match &self.joint {
            None => vec![StageDiagnostics::from_draws(&self.rows)],
            Some(joint) => {
                let d = self.spec.n_coeffs();
                let refined: Vec<usize> = (d..self.rows.n_params()).collect();
                let stage2 = self.rows.select(&refined).regroup(REFINED_GROUP);
                vec![
                    StageDiagnostics::from_draws(joint),
                    StageDiagnostics::from_draws(&stage2),
                ]
            }
        }
    }

    pub fn max_rhat(&self) -> f64 {
        self.diagnostics()
            .iter()
            .map(StageDiagnostics::max_rhat)
            .fold(1.0, f64::max)
    }

    pub fn converged(&self, gate: f64) -> bool {
        self.diagnostics().iter().all(|d| d.passes(gate))
    }
}

impl PredictiveSource for StoredFit {
    fn spec(&self) -> &SurrogateSpec {
        &self.spec
    }

    fn source_tag(&self) -> SourceTag {
        self.tag
    }

    fn rows(&self) -> Vec<PosteriorRow> {
        let d = self.spec.n_coeffs();
        let k = self.spec.dim_omega();
        self.rows
            .iter_draws()
            .map(|r| PosteriorRow {
                coeffs: r[..d].to_vec(),
                omega: r[d..d + k].to_vec(),
                sigma: r[d + k],
            })
            .collect()
    }
}

/// Outcome of one component: the fit or the training error message.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub seed: u64,
    pub component: Component,
    pub fit: std::result::Result<StoredFit, String>,
    pub wall_time_seconds: f64,
}

/// Rows, timing and convergence summary of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub rows: Vec<ResultRow>,
    pub flagged: usize,
}

impl RunSummary {
    fn new(rows: Vec<ResultRow>) -> Self {
        let flagged = rows.iter().filter(|r| !r.converged).count();
        Self { rows, flagged }
    }
}

/// Run-directory layout.
pub struct RunPaths;

impl RunPaths {
    pub fn config(run: &Path) -> PathBuf {
        run.join("config.toml")
    }
    pub fn data(run: &Path, seed: u64) -> PathBuf {
        run.join("data").join(format!("s{seed}"))
    }
    pub fn draws(run: &Path, seed: u64, c: Component) -> PathBuf {
        run.join("draws").join(format!("{}.csv", c.file_stem(seed)))
    }
    fn draws_error(run: &Path, seed: u64, c: Component) -> PathBuf {
        run.join("draws")
            .join(format!("{}.error.txt", c.file_stem(seed)))
    }
    pub fn cache(run: &Path, key: &str) -> PathBuf {
        run.join("cache").join(format!("{key}.bin"))
    }
    pub fn quantiles(run: &Path, seed: u64, method: Fusion, beta: f64) -> PathBuf {
        run.join("quantiles")
            .join(format!("s{seed}_{}_b{beta:.4}.csv", method.as_str()))
    }
    pub fn results(run: &Path) -> PathBuf {
        run.join("results.csv")
    }
    pub fn timings(run: &Path) -> PathBuf {
        run.join("timings.csv")
    }
}

/// Thread pool sized by [`THREADS_ENV`], or rayon's default.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))
        })?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(e.to_string()))
}

/// Components a sweep needs, in a fixed order.
pub fn components(cfg: &ExperimentConfig) -> Vec<Component> {
    let schemes = cfg.method.schemes();
    let mut out = Vec::new();
    if schemes.contains(&Fusion::PredictiveWeighting) {
        out.push(Component::DataDriven);
    }
    if schemes.contains(&Fusion::PowerScaling) {
        out.extend(cfg.beta_grid.iter().map(|&b| Component::PowerScaled(b)));
    }
    if schemes.contains(&Fusion::PredictiveWeighting) && !out.contains(&Component::PowerScaled(1.0))
    {
        out.push(Component::PowerScaled(1.0));
    }
    out
}

/// Stage-1 and stage-2 seeds of a component.
pub fn component_seeds(seed: u64, c: Component) -> (u64, u64) {
    let s1 = sub_seed(seed, c.stream());
    (s1, sub_seed(s1, 1))
}

fn fit_key(cfg: &ExperimentConfig, data_digest: &str, seed: u64, c: Component) -> String {
    let comp = format!("{c:?}");
    let s1 = format!("{:?}", cfg.stage1_config());
    let s2 = match c {
        Component::DataDriven => String::new(),
        Component::PowerScaled(_) => format!("{:?}", cfg.stage2_config()),
    };
    cache_key(&[
        env!("CARGO_PKG_VERSION").as_bytes(),
        cfg.case_study.as_str().as_bytes(),
        data_digest.as_bytes(),
        &seed.to_le_bytes(),
        comp.as_bytes(),
        s1.as_bytes(),
        s2.as_bytes(),
    ])
}

/// Trains one component without a gate; convergence is judged afterwards.
pub fn train_component(
    cfg: &ExperimentConfig,
    data: &CaseStudyData,
    seed: u64,
    c: Component,
) -> Result<StoredFit> {
    let spec = cfg.case_study.surrogate_spec()?;
    let (s1, s2) = component_seeds(seed, c);
    let stage1 = cfg.stage1_config().with_seed(s1);
    match c {
        Component::DataDriven => {
            let fit = train_data_driven(&data.real, &spec, &stage1, None)?;
            Ok(StoredFit::from_data_driven(&fit))
        }
        Component::PowerScaled(beta) => {
            let stage2 = cfg.stage2_config().with_seed(s2);
            let fit = train_hybrid(&data.sim, &data.real, beta, &spec, &stage1, &stage2, None)?;
            StoredFit::from_hybrid(&fit)
        }
    }
}

fn is_hard(e: &Error) -> bool {
    matches!(e, Error::Io { .. } | Error::Config(_) | Error::Csv(_))
}

fn fit_or_load(
    cfg: &ExperimentConfig,
    run: &Path,
    data: &CaseStudyData,
    digest: &str,
    seed: u64,
    c: Component,
) -> Result<FitOutcome> {
    let start = Instant::now();
    let spec = cfg.case_study.surrogate_spec()?;
    let cache = RunPaths::cache(run, &fit_key(cfg, digest, seed, c));
    let cached = cache
        .is_file()
        .then(|| {
            read_cache(&cache)
                .and_then(|(sets, secs)| Ok((StoredFit::from_draws(&spec, c, sets)?, secs)))
                .ok()
        })
        .flatten();
    let (fit, wall) = match cached {
        Some((f, secs)) => (Ok(f), secs),
        None => match train_component(cfg, data, seed, c) {
            Ok(f) => {
                let secs = start.elapsed().as_secs_f64();
                write_cache(&cache, &f.draw_sets(), secs)?;
                (Ok(f), secs)
            }
            Err(e) if is_hard(&e) => return Err(e),
            Err(e) => (Err(e.to_string()), start.elapsed().as_secs_f64()),
        },
    };
    Ok(FitOutcome {
        seed,
        component: c,
        fit,
        wall_time_seconds: wall,
    })
}

/// Points where predictive quantiles are tabulated.
pub fn plot_grid(study: CaseStudy) -> Vec<Vec<f64>> {
    let (lo, hi) = study.bounds()[0];
    linspace(lo, hi, PLOT_POINTS)
        .into_iter()
        .map(|v| vec![v])
        .collect()
}

struct SeedFits<'a> {
    seed: u64,
    data: &'a CaseStudyData,
    fits: Vec<&'a FitOutcome>,
}

impl SeedFits<'_> {
    fn get(&self, c: Component) -> Option<&FitOutcome> {
        self.fits.iter().copied().find(|f| f.component == c)
    }
}

fn predict_all(fit: &StoredFit, inputs: &[Vec<f64>], seed: u64) -> Result<PredictiveDraws> {
    predictive_draws(fit, inputs, sub_seed(seed, PREDICT_STREAM))
}

/// A scored cell before it is expanded over splits.
struct Scored {
    method: Fusion,
    beta: f64,
    outcome: std::result::Result<(PredictiveKind, f64, bool), String>,
    wall: f64,
}

#[allow(clippy::large_enum_variant)]
enum PredictiveKind {
    Single(PredictiveDraws),
    Mixture(crate::predict::MixturePredictive),
}

fn score_seed(cfg: &ExperimentConfig, sf: &SeedFits<'_>) -> Result<Vec<Scored>> {
    let inputs = &sf.data.eval.inputs;
    let gate = cfg.gate;
    let mut out = Vec::new();
    for method in cfg.method.schemes() {
        match method {
            Fusion::PowerScaling => {
                for &beta in &cfg.beta_grid {
                    let f = sf
                        .get(Component::PowerScaled(beta))
                        .expect("planned component");
                    let outcome = match &f.fit {
                        Ok(fit) => Ok((
                            PredictiveKind::Single(predict_all(fit, inputs, sf.seed)?),
                            fit.max_rhat(),
                            fit.converged(gate),
                        )),
                        Err(e) => Err(e.clone()),
                    };
                    out.push(Scored {
                        method,
                        beta,
                        outcome,
                        wall: f.wall_time_seconds,
                    });
                }
            }
            Fusion::PredictiveWeighting => {
                let dd = sf.get(Component::DataDriven).expect("planned component");
                let sb = sf
                    .get(Component::PowerScaled(1.0))
                    .expect("planned component");
                let wall = dd.wall_time_seconds + sb.wall_time_seconds;
                let parts = match (&dd.fit, &sb.fit) {
                    (Ok(d), Ok(s)) => Ok((d, s)),
                    (Err(e), _) => Err(format!("data-driven component: {e}")),
                    (_, Err(e)) => Err(format!("simulation-based component: {e}")),
                };
                let preds = match parts {
                    Ok((d, s)) => Ok((
                        predict_all(d, inputs, sf.seed)?,
                        predict_all(s, inputs, sf.seed)?,
                        d.max_rhat().max(s.max_rhat()),
                        d.converged(gate) && s.converged(gate),
                    )),
                    Err(e) => Err(e),
                };
                for &beta in &cfg.beta_grid {
                    let outcome = match &preds {
                        Ok((d, s, r, conv)) => {
                            let total = d.n_draws().min(s.n_draws());
                            let seed = sub_seed(sf.seed, MIXTURE_STREAM ^ beta.to_bits());
                            let mix = mixture_predictive(s, d, beta, total, seed)?;
                            Ok((PredictiveKind::Mixture(mix), *r, *conv))
                        }
                        Err(e) => Err(e.clone()),
                    };
                    out.push(Scored {
                        method,
                        beta,
                        outcome,
                        wall,
                    });
                }
            }
        }
    }
    Ok(out)
}

fn expand(
    cfg: &ExperimentConfig,
    seed: u64,
    data: &CaseStudyData,
    s: &Scored,
) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for split in &data.eval.splits {
        let mut row = ResultRow {
            case_study: cfg.case_study,
            method: s.method,
            beta: s.beta,
            split: split.label.clone(),
            seed,
            elpd: f64::NAN,
            rmse: None,
            rhat_max: f64::NAN,
            converged: false,
            error: None,
            wall_time_seconds: s.wall,
        };
        match &s.outcome {
            Ok((pred, rhat, conv)) => {
                row.rhat_max = *rhat;
                row.converged = *conv;
                match pred {
                    PredictiveKind::Single(p) => {
                        let sub = p.subset(&split.indices)?;
                        row.elpd = elpd(&sub, &split.noisy)?;
                        row.rmse = split.truth.as_ref().map(|t| rmse(&sub, t)).transpose()?;
                    }
                    PredictiveKind::Mixture(m) => {
                        let sub = m.subset(&split.indices)?;
                        row.elpd = elpd(&sub, &split.noisy)?;
                        row.rmse = split
                            .truth
                            .as_ref()
                            .map(|t| rmse(sub.samples(), t))
                            .transpose()?;
                    }
                }
            }
            Err(e) => row.error = Some(e.clone()),
        }
        rows.push(row);
    }
    Ok(rows)
}

fn write_quantiles(path: &Path, pred: &PredictiveDraws) -> Result<()> {
    #[derive(Serialize)]
    struct Q {
        x: f64,
        q025: f64,
        q25: f64,
        q50: f64,
        q75: f64,
        q975: f64,
    }
    let q = pred.y_quantiles(&QUANTILES);
    let rows: Vec<Q> = pred
        .test_inputs()
        .iter()
        .zip(q)
        .map(|(x, q)| Q {
            x: x[0],
            q025: q[0],
            q25: q[1],
            q50: q[2],
            q75: q[3],
            q975: q[4],
        })
        .collect();
    save_table(path, &rows)
}

fn data_digest(data: &CaseStudyData) -> String {
    cache_key(&[format!("{data:?}").as_bytes()])
}

fn load_seed_data(cfg: &ExperimentConfig, seed: u64) -> Result<CaseStudyData> {
    cfg.case_study.load(seed, &cfg.data_dir)
}

fn score_all(
    cfg: &ExperimentConfig,
    run: &Path,
    datasets: &[CaseStudyData],
    outcomes: &[FitOutcome],
    write_tables: bool,
) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for (&seed, data) in cfg.seeds.iter().zip(datasets) {
        let sf = SeedFits {
            seed,
            data,
            fits: outcomes.iter().filter(|o| o.seed == seed).collect(),
        };
        for s in score_seed(cfg, &sf)? {
            rows.extend(expand(cfg, seed, data, &s)?);
        }
        if write_tables {
            let grid = plot_grid(cfg.case_study);
            for s in score_seed_on(cfg, &sf, &grid)? {
                let path = RunPaths::quantiles(run, seed, s.method, s.beta);
                match &s.outcome {
                    Ok((PredictiveKind::Single(p), ..)) => write_quantiles(&path, p)?,
                    Ok((PredictiveKind::Mixture(m), ..)) => write_quantiles(&path, m.samples())?,
                    Err(_) => {}
                }
            }
        }
    }
    Ok(rows)
}

/// Predictives of every cell of one seed on arbitrary inputs.
fn score_seed_on(
    cfg: &ExperimentConfig,
    sf: &SeedFits<'_>,
    inputs: &[Vec<f64>],
) -> Result<Vec<Scored>> {
    let mut data = sf.data.clone();
    data.eval.inputs = inputs.to_vec();
    let view = SeedFits {
        seed: sf.seed,
        data: &data,
        fits: sf.fits.clone(),
    };
    score_seed(cfg, &view)
}

fn write_results(run: &Path, rows: &[ResultRow]) -> Result<()> {
    save_table(&RunPaths::results(run), rows)?;
    let mut timings: Vec<TimingRow> = Vec::new();
    for r in rows {
        let t = TimingRow {
            method: r.method,
            beta: r.beta,
            seed: r.seed,
            wall_time_seconds: r.wall_time_seconds,
        };
        if !timings
            .iter()
            .any(|x| x.method == t.method && x.beta == t.beta && x.seed == t.seed)
        {
            timings.push(t);
        }
    }
    save_table(&RunPaths::timings(run), &timings)
}

/// Reads `results.csv` and joins wall times from `timings.csv` when present.
pub fn load_results(run: &Path) -> Result<Vec<ResultRow>> {
    let mut rows: Vec<ResultRow> = load_table(&RunPaths::results(run))?;
    if RunPaths::timings(run).is_file() {
        let timings: Vec<TimingRow> = load_table(&RunPaths::timings(run))?;
        for r in &mut rows {
            if let Some(t) = timings
                .iter()
                .find(|t| t.method == r.method && t.beta == r.beta && t.seed == r.seed)
            {
                r.wall_time_seconds = t.wall_time_seconds;
            }
        }
    }
    Ok(rows)
}

/// Generates the datasets of every seed and writes them under `data/`.
pub fn generate_data(cfg: &ExperimentConfig) -> Result<Vec<CaseStudyData>> {
    cfg.validate()?;
    let spec = cfg.case_study.surrogate_spec()?;
    cfg.seeds
        .iter()
        .map(|&seed| {
            let data = load_seed_data(cfg, seed)?;
            save_datasets(&RunPaths::data(&cfg.output_dir, seed), &data, &spec)?;
            Ok(data)
        })
        .collect()
}

/// Trains the listed components for every seed, reusing cached draws, and
/// writes their draw files.
pub fn train_components(
    cfg: &ExperimentConfig,
    datasets: &[CaseStudyData],
    comps: &[Component],
) -> Result<Vec<FitOutcome>> {
    let run = cfg.output_dir.as_path();
    let digests: Vec<String> = datasets.iter().map(data_digest).collect();
    let jobs: Vec<(usize, Component)> = (0..cfg.seeds.len())
        .flat_map(|i| comps.iter().map(move |&c| (i, c)))
        .collect();
    let pool = thread_pool()?;
    let outcomes = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, c)| fit_or_load(cfg, run, &datasets[i], &digests[i], cfg.seeds[i], c))
            .collect::<Result<Vec<_>>>()
    })?;
    for o in &outcomes {
        let err_path = RunPaths::draws_error(run, o.seed, o.component);
        match &o.fit {
            Ok(f) => {
                save_draws(&RunPaths::draws(run, o.seed, o.component), &f.draw_sets())?;
                if err_path.is_file() {
                    std::fs::remove_file(&err_path).map_err(|e| Error::io(&err_path, e))?;
                }
            }
            Err(msg) => {
                create_dir(err_path.parent().expect("has parent"))?;
                std::fs::write(&err_path, msg).map_err(|e| Error::io(&err_path, e))?;
            }
        }
    }
    Ok(outcomes)
}

/// Runs a full sweep: data, training, scoring and every artifact.
///
/// Training failures and gate violations are recorded per row; I/O and
/// configuration errors abort.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let run = cfg.output_dir.as_path();
    create_dir(run)?;
    std::fs::write(RunPaths::config(run), cfg.to_toml_string()?)
        .map_err(|e| Error::io(RunPaths::config(run), e))?;
    let datasets = generate_data(cfg)?;
    let outcomes = train_components(cfg, &datasets, &components(cfg))?;
    let rows = score_all(cfg, run, &datasets, &outcomes, true)?;
    write_results(run, &rows)?;
    Ok(RunSummary::new(rows))
}

/// Configuration, datasets and fits of a finished run, read from disk.
pub struct LoadedRun {
    pub config: ExperimentConfig,
    pub datasets: Vec<CaseStudyData>,
    pub outcomes: Vec<FitOutcome>,
}

pub fn load_run(run: &Path) -> Result<LoadedRun> {
    let mut config = ExperimentConfig::load(&RunPaths::config(run))?;
    config.output_dir = run.to_path_buf();
    let spec = config.case_study.surrogate_spec()?;
    let datasets = config
        .seeds
        .iter()
        .map(|&s| load_datasets(&RunPaths::data(run, s), &spec))
        .collect::<Result<Vec<_>>>()?;
    let timings: Vec<TimingRow> = if RunPaths::timings(run).is_file() {
        load_table(&RunPaths::timings(run))?
    } else {
        Vec::new()
    };
    let mut outcomes = Vec::new();
    for &seed in &config.seeds {
        for c in components(&config) {
            let path = RunPaths::draws(run, seed, c);
            let err_path = RunPaths::draws_error(run, seed, c);
            let fit = if err_path.is_file() {
                Err(std::fs::read_to_string(&err_path).map_err(|e| Error::io(&err_path, e))?)
            } else {
                Ok(StoredFit::from_draws(&spec, c, load_draws(&path)?)?)
            };
            let wall = match c {
                Component::PowerScaled(b) => timings
                    .iter()
                    .find(|t| t.method == Fusion::PowerScaling && t.beta == b && t.seed == seed)
                    .map_or(0.0, |t| t.wall_time_seconds),
                Component::DataDriven => 0.0,
            };
            outcomes.push(FitOutcome {
                seed,
                component: c,
                fit,
                wall_time_seconds: wall,
            });
        }
    }
    Ok(LoadedRun {
        config,
        datasets,
        outcomes,
    })
}

/// Rescores a finished run from its persisted draws and rewrites
/// `results.csv`; wall times are carried over from `timings.csv`.
pub fn evaluate_run(run: &Path) -> Result<RunSummary> {
    let loaded = load_run(run)?;
    let mut rows = score_all(
        &loaded.config,
        run,
        &loaded.datasets,
        &loaded.outcomes,
        false,
    )?;
    if let Ok(old) = load_results(run) {
        for r in &mut rows {
            if let Some(o) = old
                .iter()
                .find(|o| o.method == r.method && o.beta == r.beta && o.seed == r.seed)
            {
                r.wall_time_seconds = o.wall_time_seconds;
            }
        }
    }
    save_table(&RunPaths::results(run), &rows)?;
    Ok(RunSummary::new(rows))
}

pub(crate) fn predictives_on(
    loaded: &LoadedRun,
    seed: u64,
    inputs: &[Vec<f64>],
) -> Result<Vec<(Fusion, f64, std::result::Result<PredictiveDraws, String>)>> {
    let i = loaded
        .config
        .seeds
        .iter()
        .position(|&s| s == seed)
        .ok_or_else(|| Error::InvalidInput(format!("seed {seed} is not part of the run")))?;
    let sf = SeedFits {
        seed,
        data: &loaded.datasets[i],
        fits: loaded.outcomes.iter().filter(|o| o.seed == seed).collect(),
    };
    Ok(score_seed_on(&loaded.config, &sf, inputs)?
        .into_iter()
        .map(|s| {
            let p = s.outcome.map(|(k, ..)| match k {
                PredictiveKind::Single(p) => p,
                PredictiveKind::Mixture(m) => m.samples().clone(),
            });
            (s.method, s.beta, p)
        })
        .collect())
}
