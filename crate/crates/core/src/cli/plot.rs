//! Plot-ready CSV bundles of a finished run. Nothing is rendered.
//!
//! Files written to `<run>/plots/`:
//! - `fans.csv`: `seed, method, beta, x, q025, q25, q50, q75, q975, mu_median`;
//!   predictive quantiles of new observations and the median mean curve.
//! - `spaghetti.csv`: `seed, method, beta, curve, source, <latent inputs>, x, mu`;
//!   up to [`SPAGHETTI_CURVES`] mean curves per cell for the first seed,
//!   tagged by the draw's latent inputs (empty for data-driven draws).
//! - `beta_curves.csv`: `case_study, method, split, seed, beta, elpd, rmse, converged`.
//! - `observations.csv`: `set, x, y, truth` for training data and test points.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::Fusion;
use super::experiment::{load_results, load_run, plot_grid, predictives_on, QUANTILES};
use super::io::{fmt_f64, save_table};
use super::CaseStudy;
use crate::datagen::linspace;
use crate::error::{Error, Result};
use crate::predict::SourceTag;
use crate::train::even_stride;

pub const SPAGHETTI_CURVES: usize = 200;
pub const SPAGHETTI_POINTS: usize = 50;
/// Weighting factors drawn as spaghetti, when on the grid.
pub const SPAGHETTI_BETAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Serialize)]
struct FanRow {
    seed: u64,
    method: Fusion,
    beta: f64,
    x: f64,
    q025: f64,
    q25: f64,
    q50: f64,
    q75: f64,
    q975: f64,
    mu_median: f64,
}

#[derive(Serialize)]
struct BetaRow<'a> {
    case_study: CaseStudy,
    method: Fusion,
    split: &'a str,
    seed: u64,
    beta: f64,
    elpd: f64,
    rmse: Option<f64>,
    converged: bool,
}

#[derive(Serialize)]
struct ObsRow<'a> {
    set: &'a str,
    x: f64,
    y: f64,
    truth: Option<f64>,
}

pub fn emit_plot_data(run: &Path) -> Result<Vec<PathBuf>> {
    let loaded = load_run(run)?;
    let results = load_results(run)?;
    let cfg = &loaded.config;
    let dir = run.join("plots");
    let mut files = Vec::new();

    let grid = plot_grid(cfg.case_study);
    let mut fans = Vec::new();
    for &seed in &cfg.seeds {
        for (method, beta, pred) in predictives_on(&loaded, seed, &grid)? {
            let Ok(pred) = pred else { continue };
            let q = pred.y_quantiles(&QUANTILES);
            let mu = pred.mu_quantiles(&[0.5]);
            for ((x, q), m) in grid.iter().zip(q).zip(mu) {
                fans.push(FanRow {
                    seed,
                    method,
                    beta,
                    x: x[0],
                    q025: q[0],
                    q25: q[1],
                    q50: q[2],
                    q75: q[3],
                    q975: q[4],
                    mu_median: m[0],
                });
            }
        }
    }
    let path = dir.join("fans.csv");
    save_table(&path, &fans)?;
    files.push(path);

    let path = dir.join("spaghetti.csv");
    write_spaghetti(&path, &loaded, cfg.seeds[0])?;
    files.push(path);

    let mut rows: Vec<&_> = results.iter().collect();
    rows.sort_by(|a, b| {
        (a.method, &a.split, a.seed)
            .cmp(&(b.method, &b.split, b.seed))
            .then(a.beta.total_cmp(&b.beta))
    });
    let curves: Vec<BetaRow> = rows
        .iter()
        .map(|r| BetaRow {
            case_study: r.case_study,
            method: r.method,
            split: &r.split,
            seed: r.seed,
            beta: r.beta,
            elpd: r.elpd,
            rmse: r.rmse,
            converged: r.converged,
        })
        .collect();
    let path = dir.join("beta_curves.csv");
    save_table(&path, &curves)?;
    files.push(path);

    let data = &loaded.datasets[0];
    let mut obs: Vec<ObsRow> = data
        .real
        .x()
        .iter()
        .zip(data.real.y())
        .map(|(x, &y)| ObsRow {
            set: "train",
            x: x[0],
            y,
            truth: None,
        })
        .collect();
    for s in &data.eval.splits {
        for (k, &i) in s.indices.iter().enumerate() {
            obs.push(ObsRow {
                set: &s.label,
                x: data.eval.inputs[i][0],
                y: s.noisy.targets()[k],
                truth: s.truth.as_ref().map(|t| t.targets()[k]),
            });
        }
    }
    let path = dir.join("observations.csv");
    save_table(&path, &obs)?;
    files.push(path);
    Ok(files)
}

fn write_spaghetti(path: &Path, loaded: &super::experiment::LoadedRun, seed: u64) -> Result<()> {
    let cfg = &loaded.config;
    let spec = cfg.case_study.surrogate_spec()?;
    let (lo, hi) = cfg.case_study.bounds()[0];
    let grid: Vec<Vec<f64>> = linspace(lo, hi, SPAGHETTI_POINTS)
        .into_iter()
        .map(|v| vec![v])
        .collect();
    if let Some(dir) = path.parent() {
        super::io::create_dir(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["seed", "method", "beta", "curve", "source"]
        .map(String::from)
        .to_vec();
    header.extend(spec.omega_names().iter().cloned());
    header.extend(["x".to_string(), "mu".to_string()]);
    w.write_record(&header)?;
    let k = spec.dim_omega();
    for (method, beta, pred) in predictives_on(loaded, seed, &grid)? {
        if !SPAGHETTI_BETAS.contains(&beta) {
            continue;
        }
        let Ok(pred) = pred else { continue };
        let picks = even_stride(pred.n_draws(), pred.n_draws().min(SPAGHETTI_CURVES));
        for (curve, &s) in picks.iter().enumerate() {
            let source = pred.labels().map_or(pred.source(), |l| l[s]);
            let omega = &pred.omega()[s];
            for (x, mu) in grid.iter().zip(&pred.mu_draws()[s]) {
                let mut rec = vec![
                    seed.to_string(),
                    method.as_str().to_string(),
                    fmt_f64(beta),
                    curve.to_string(),
                    source.as_str().to_string(),
                ];
                rec.extend((0..k).map(|j| {
                    if source == SourceTag::DataDriven {
                        String::new()
                    } else {
                        omega.get(j).map_or(String::new(), |v| fmt_f64(*v))
                    }
                }));
                rec.push(fmt_f64(x[0]));
                rec.push(fmt_f64(*mu));
                w.write_record(&rec)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
