//! Acceptance criteria at desk scale. Prints one line per criterion and
//! exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hybrid_surrogate::basis::MultiIndexSet;
use hybrid_surrogate::cli::{
    coarse_beta_grid, run_experiment, train_component, CaseStudy, Component, ExperimentConfig,
    Fusion, Method, Preset, ResultRow,
};
use hybrid_surrogate::datagen::{cs1_simulator, negbin_sample, sir_solve, sobol_scaled, SirConfig};
use hybrid_surrogate::metrics::{elpd, rmse, EvalKind, EvaluationSet};
use hybrid_surrogate::model::LikelihoodFamily;
use hybrid_surrogate::predict::{
    log_mean_exp, predictive_draws, predictive_from_rows, PosteriorRow, SourceTag,
};
use hybrid_surrogate::sampler::{
    ess, run_chains, split_rhat, ChainConfig, Init, LogDensity, StageTag,
};
use hybrid_surrogate::train::{
    compute_scaling, train_hybrid, train_simulation_based, RefineConfig,
};

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const CS1_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn desk_config(
    case_study: CaseStudy,
    method: Method,
    grid: Vec<f64>,
    out: &Path,
) -> ExperimentConfig {
    ExperimentConfig {
        case_study,
        method,
        beta_grid: grid,
        preset: Preset::Desk,
        seeds: SEEDS.to_vec(),
        output_dir: out.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

fn find<'a>(
    rows: &'a [ResultRow],
    method: Fusion,
    beta: f64,
    split: &str,
    seed: u64,
) -> &'a ResultRow {
    rows.iter()
        .find(|r| r.method == method && r.beta == beta && r.split == split && r.seed == seed)
        .unwrap_or_else(|| panic!("no row for {method:?} beta {beta} {split} seed {seed}"))
}

fn rmse_of(r: &ResultRow) -> f64 {
    r.rmse.unwrap_or(f64::NAN)
}

fn flagged(rows: &[ResultRow]) -> usize {
    rows.iter().filter(|r| !r.converged).count()
}

fn scaling_schedule() -> Outcome {
    let expected = [
        (0.0, 0.0, 1.0),
        (0.25, 1.0 / 3.0, 1.0),
        (0.5, 1.0, 1.0),
        (0.75, 1.0, 1.0 / 3.0),
        (1.0, 1.0, 0.0),
    ];
    let mut worst = 0.0_f64;
    for (beta, a_s, a_r) in expected {
        let w = compute_scaling(beta).map_err(|e| e.to_string())?;
        worst = worst
            .max((w.alpha_s - a_s).abs())
            .max((w.alpha_r - a_r).abs());
    }
    check(worst <= f64::EPSILON, format!("max deviation {worst:e}"))
}

fn basis_cardinalities() -> Outcome {
    let a = MultiIndexSet::total_degree(2, 5)
        .map_err(|e| e.to_string())?
        .len();
    let b = MultiIndexSet::total_degree(3, 5)
        .map_err(|e| e.to_string())?
        .len();
    check(a == 21 && b == 56, format!("(2,5) -> {a}, (3,5) -> {b}"))
}

struct LinearGaussian {
    design: Vec<[f64; 5]>,
    y: Vec<f64>,
    noise: f64,
    prior_sd: f64,
}

impl LinearGaussian {
    fn new() -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let theta = [0.7, -1.2, 0.3, 2.5, -0.4];
        let noise = 0.4;
        let mut design = Vec::new();
        let mut y = Vec::new();
        for _ in 0..50 {
            let row: [f64; 5] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let e: f64 = rng.sample(rand_distr::StandardNormal);
            y.push(row.iter().zip(&theta).map(|(a, b)| a * b).sum::<f64>() + noise * e);
            design.push(row);
        }
        Self {
            design,
            y,
            noise,
            prior_sd: 3.0,
        }
    }

    /// Posterior mean and marginal sds through a Cholesky factor of the
    /// precision matrix.
    fn exact(&self) -> ([f64; 5], [f64; 5]) {
        let s2 = self.noise * self.noise;
        let mut a = [[0.0; 5]; 5];
        let mut b = [0.0; 5];
        for (row, y) in self.design.iter().zip(&self.y) {
            for i in 0..5 {
                b[i] += row[i] * y / s2;
                for j in 0..5 {
                    a[i][j] += row[i] * row[j] / s2;
                }
            }
        }
        for (i, r) in a.iter_mut().enumerate() {
            r[i] += 1.0 / (self.prior_sd * self.prior_sd);
        }
        let mut l = [[0.0; 5]; 5];
        for i in 0..5 {
            for j in 0..=i {
                let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
                l[i][j] = if i == j {
                    (a[i][i] - s).sqrt()
                } else {
                    (a[i][j] - s) / l[j][j]
                };
            }
        }
        let solve = |rhs: [f64; 5]| {
            let mut z = [0.0; 5];
            for i in 0..5 {
                z[i] = (rhs[i] - (0..i).map(|k| l[i][k] * z[k]).sum::<f64>()) / l[i][i];
            }
            let mut x = [0.0; 5];
            for i in (0..5).rev() {
                x[i] = (z[i] - (i + 1..5).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
            }
            x
        };
        let mean = solve(b);
        let sd = std::array::from_fn(|i| {
            let mut e = [0.0; 5];
            e[i] = 1.0;
            solve(e)[i].sqrt()
        });
        (mean, sd)
    }
}

impl LogDensity for LinearGaussian {
    fn dim(&self) -> usize {
        5
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let s2 = self.noise * self.noise;
        let lik: f64 = self
            .design
            .iter()
            .zip(&self.y)
            .map(|(row, y)| {
                let r = y - row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                -0.5 * r * r / s2
            })
            .sum();
        lik - 0.5 * x.iter().map(|v| v * v).sum::<f64>() / (self.prior_sd * self.prior_sd)
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn log_density_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let s2 = self.noise * self.noise;
        let p2 = self.prior_sd * self.prior_sd;
        for (g, v) in grad.iter_mut().zip(x) {
            *g = -v / p2;
        }
        for (row, y) in self.design.iter().zip(&self.y) {
            let r = y - row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            for (g, a) in grad.iter_mut().zip(row) {
                *g += a * r / s2;
            }
        }
        self.log_density(x)
    }
}

fn sampler_correctness() -> Outcome {
    let target = LinearGaussian::new();
    let (mean, sd) = target.exact();
    let start = Instant::now();
    let run = run_chains(
        &target,
        &ChainConfig::desk().with_seed(5),
        &Init::Dispersed,
        StageTag::Generic,
    )
    .map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let rhat = split_rhat(&run.draws);
    let n_eff = ess(&run.draws);
    let (mut z_max, mut sd_max, mut rhat_max) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut gate = true;
    for p in 0..5 {
        let e = n_eff[p].value().unwrap_or(f64::NAN);
        let mcse = run.draws.sd(p) / e.sqrt();
        z_max = z_max.max((run.draws.mean(p) - mean[p]).abs() / mcse);
        sd_max = sd_max.max((run.draws.sd(p) - sd[p]).abs() / sd[p]);
        rhat_max = rhat_max.max(rhat[p].as_report_value());
        gate &= rhat[p].passes_rhat_gate(1.05);
    }
    check(
        z_max <= 4.0 && sd_max <= 0.1 && gate && secs < 30.0,
        format!(
            "max |z| {z_max:.2}, max sd error {:.1}%, max R-hat {rhat_max:.4}, {secs:.1} s",
            100.0 * sd_max
        ),
    )
}

fn surrogate_fidelity() -> Outcome {
    let start = Instant::now();
    let data = CaseStudy::Cs1
        .load(0, Path::new("data"))
        .map_err(|e| e.to_string())?;
    let spec = CaseStudy::Cs1.surrogate_spec().map_err(|e| e.to_string())?;
    let fit = train_simulation_based(
        &data.sim,
        &data.real,
        &spec,
        &ChainConfig::desk(),
        &RefineConfig::desk(),
        None,
    )
    .map_err(|e| e.to_string())?;
    let coeffs = fit.paired_coeffs();
    let held_out =
        &sobol_scaled(&[(1.0, 200.0), (0.6, 1.4)], 200).map_err(|e| e.to_string())?[100..];
    let mut sq = 0.0;
    for p in held_out {
        let pred = coeffs
            .iter()
            .map(|c| spec.surrogate(c, &p[..1], &p[1..]))
            .sum::<f64>()
            / coeffs.len() as f64;
        let exact = cs1_simulator(p[0], p[1]).map_err(|e| e.to_string())?;
        sq += (pred - exact).powi(2);
    }
    let err = (sq / held_out.len() as f64).sqrt();
    let secs = start.elapsed().as_secs_f64();
    check(
        err < 0.02 && secs < 300.0,
        format!("held-out RMSE {err:.4} (limit 0.02), {secs:.1} s"),
    )
}

fn cs1_oos_ordering(rows: &[ResultRow]) -> Outcome {
    let mut hold = 0;
    for seed in SEEDS {
        let ok = [Fusion::PowerScaling, Fusion::PredictiveWeighting]
            .iter()
            .all(|&m| {
                let (r0, r1) = (
                    find(rows, m, 0.0, "OOS", seed),
                    find(rows, m, 1.0, "OOS", seed),
                );
                r0.elpd > r1.elpd && rmse_of(r0) < rmse_of(r1)
            });
        hold += usize::from(ok);
    }
    check(
        hold >= 4,
        format!(
            "beta 0 beats beta 1 on {hold}/5 seeds ({} rows flagged)",
            flagged(rows)
        ),
    )
}

fn cs1_ood_ordering(rows: &[ResultRow]) -> Outcome {
    let mut endpoints = 0;
    for seed in SEEDS {
        let ok = [Fusion::PowerScaling, Fusion::PredictiveWeighting]
            .iter()
            .all(|&m| {
                let (r0, r1) = (
                    find(rows, m, 0.0, "OOD", seed),
                    find(rows, m, 1.0, "OOD", seed),
                );
                r1.elpd > r0.elpd && rmse_of(r1) < rmse_of(r0)
            });
        endpoints += usize::from(ok);
    }
    let mut interior = Vec::new();
    for beta in [0.25, 0.5, 0.75] {
        let n = SEEDS
            .iter()
            .filter(|&&seed| {
                let ps = find(rows, Fusion::PowerScaling, beta, "OOD", seed);
                let pw = find(rows, Fusion::PredictiveWeighting, beta, "OOD", seed);
                pw.elpd >= ps.elpd && rmse_of(ps) <= rmse_of(pw)
            })
            .count();
        interior.push(n);
    }
    check(
        endpoints >= 4 && interior.iter().all(|&n| n >= 3),
        format!(
            "beta 1 beats beta 0 on {endpoints}/5 seeds; PW elpd and PS rmse ahead at beta .25/.5/.75 on {}/{}/{} seeds",
            interior[0], interior[1], interior[2]
        ),
    )
}

fn cs21_interior_optimum(rows: &[ResultRow]) -> Outcome {
    let grid = coarse_beta_grid();
    let mut hold = 0;
    let mut argmax = Vec::new();
    for seed in SEEDS {
        let elpds: Vec<f64> = grid
            .iter()
            .map(|&b| find(rows, Fusion::PowerScaling, b, "OOD", seed).elpd)
            .collect();
        let (best, top) = elpds
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
            );
        let beta = grid[best];
        argmax.push(beta);
        let ok = beta > 0.0 && beta <= 0.3 && top > elpds[0] && top > elpds[grid.len() - 1];
        hold += usize::from(ok);
    }
    check(
        hold >= 3,
        format!(
            "maximum in (0, 0.3] on {hold}/5 seeds, argmax {argmax:?} ({} rows flagged)",
            flagged(rows)
        ),
    )
}

fn endpoint_identities(cfg: &ExperimentConfig, rows: &[ResultRow]) -> Outcome {
    let data = CaseStudy::Cs1
        .load(0, &cfg.data_dir)
        .map_err(|e| e.to_string())?;
    let spec = CaseStudy::Cs1.surrogate_spec().map_err(|e| e.to_string())?;
    let (s1, s2) = (
        ChainConfig::desk().with_seed(21),
        RefineConfig::desk().with_seed(22),
    );
    let a = train_hybrid(&data.sim, &data.real, 1.0, &spec, &s1, &s2, None)
        .map_err(|e| e.to_string())?;
    let b = train_simulation_based(&data.sim, &data.real, &spec, &s1, &s2, None)
        .map_err(|e| e.to_string())?;
    let bits = |f: &hybrid_surrogate::train::HybridFit| -> Vec<u64> {
        f.joint_draws()
            .iter_draws()
            .chain(f.refined_draws().iter_draws())
            .flat_map(|d| d.iter().map(|v| v.to_bits()))
            .collect()
    };
    let bitwise = a == b && bits(&a) == bits(&b);

    let mut worst = 0.0_f64;
    for (comp, beta) in [
        (Component::DataDriven, 0.0),
        (Component::PowerScaled(1.0), 1.0),
    ] {
        let fit = train_component(cfg, &data, 0, comp).map_err(|e| e.to_string())?;
        let pred = predictive_draws(&fit, &data.eval.inputs, 0).map_err(|e| e.to_string())?;
        for split in &data.eval.splits {
            let sub = pred.subset(&split.indices).map_err(|e| e.to_string())?;
            let direct = elpd(&sub, &split.noisy).map_err(|e| e.to_string())?;
            let row = find(rows, Fusion::PredictiveWeighting, beta, &split.label, 0);
            worst = worst.max((row.elpd - direct).abs());
        }
    }
    check(
        bitwise && worst <= 1e-12,
        format!("PS(1) and simulation-based draws bitwise equal: {bitwise}; PW endpoint ELPD gap {worst:e}"),
    )
}

fn sir_solver() -> Outcome {
    let start = Instant::now();
    let grid: Vec<f64> = (1..=40).map(|k| 0.25 * k as f64).collect();
    let mut conservation = 0.0_f64;
    for (xi, gamma, pop, i0) in [
        (1.6, 0.7, 1000.0, 10.0),
        (3.0, 0.55, 1000.0, 1.0),
        (0.5, 0.1, 1e5, 250.0),
        (2.2, 0.3, 6e7, 1e3),
    ] {
        let tr = sir_solve(&SirConfig::new(xi, gamma, pop, i0, grid.clone()))
            .map_err(|e| e.to_string())?;
        for k in 0..grid.len() {
            conservation = conservation.max((tr.s[k] + tr.i[k] + tr.r[k] - pop).abs() / pop);
        }
    }
    let mut decay = 0.0_f64;
    for (gamma, i0) in [(0.7, 10.0), (0.25, 500.0)] {
        let tr = sir_solve(&SirConfig::new(0.0, gamma, 1000.0, i0, grid.clone()))
            .map_err(|e| e.to_string())?;
        for (t, i) in grid.iter().zip(&tr.i) {
            let exact = i0 * (-gamma * t).exp();
            decay = decay.max((i - exact).abs() / exact);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        conservation <= 1e-8 && decay <= 1e-4 && secs < 1.0,
        format!(
            "conservation {conservation:e} of P, decay error {decay:e}, {:.1} ms",
            1e3 * secs
        ),
    )
}

fn distribution_oracles() -> Outcome {
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(54);
    let mut band = 0.0_f64;
    for (mu, phi) in [(3.0, 5.0), (40.0, 2.0), (250.0, 20.0)] {
        let xs: Vec<f64> = (0..n)
            .map(|_| negbin_sample(mu, phi, &mut rng).map(|v| v as f64))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let m = xs.iter().sum::<f64>() / n as f64;
        let c2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
        let c4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n as f64;
        let var = mu + mu * mu / phi;
        let z_mean = (m - mu).abs() / (var / n as f64).sqrt();
        let z_var = (c2 - var).abs() / ((c4 - c2 * c2) / n as f64).sqrt();
        band = band.max(z_mean).max(z_var);
    }
    let mut lognormal = 0.0_f64;
    for (loc, sigma) in [(0.0, 1.0), (1.5, 0.25), (-2.0, 0.8), (3.0, 0.0)] {
        let fam = LikelihoodFamily::log_normal(0.0);
        let exact: f64 = (loc + sigma * sigma / 2.0_f64).exp();
        lognormal = lognormal.max((fam.mean(loc, sigma) - exact).abs() / exact);
    }
    check(
        band <= 4.0 && lognormal <= f64::EPSILON,
        format!(
            "negative binomial max |z| {band:.2}; log-normal mean relative error {lognormal:e}"
        ),
    )
}

fn metric_oracles() -> Outcome {
    let spec = CaseStudy::Cs1.surrogate_spec().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut elpd_gap, mut rmse_gap) = (0.0_f64, 0.0_f64);
    for _ in 0..5 {
        let rows: Vec<PosteriorRow> = (0..100)
            .map(|_| PosteriorRow {
                coeffs: (0..spec.n_coeffs())
                    .map(|_| rng.random_range(-0.5..0.5))
                    .collect(),
                omega: vec![rng.random_range(0.6..1.4)],
                sigma: rng.random_range(0.1..1.0),
            })
            .collect();
        let xs: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![rng.random_range(1.0..200.0)])
            .collect();
        let ys: Vec<f64> = (0..50).map(|_| rng.random_range(-2.0..2.0)).collect();
        let truth: Vec<f64> = (0..50).map(|_| rng.random_range(-2.0..2.0)).collect();
        let pred = predictive_from_rows(&spec, &rows, SourceTag::SimulationBased, &xs, 3)
            .map_err(|e| e.to_string())?;
        let noisy = EvaluationSet::new(xs.clone(), ys.clone(), EvalKind::Noisy, "r")
            .map_err(|e| e.to_string())?;
        let exact = EvaluationSet::new(xs.clone(), truth.clone(), EvalKind::Truth, "r")
            .map_err(|e| e.to_string())?;
        let got_elpd = elpd(&pred, &noisy).map_err(|e| e.to_string())?;
        let got_rmse = rmse(&pred, &exact).map_err(|e| e.to_string())?;

        let (mut naive_elpd, mut naive_rmse) = (0.0, 0.0);
        for i in 0..50 {
            let (mut dens, mut sq) = (0.0, 0.0);
            for r in &rows {
                let mu = spec.surrogate(&r.coeffs, &xs[i], &r.omega);
                let z = (ys[i] - mu) / r.sigma;
                dens += (-0.5 * z * z).exp() / (r.sigma * (2.0 * std::f64::consts::PI).sqrt());
                sq += (mu - truth[i]).powi(2);
            }
            naive_elpd += (dens / 100.0).ln() / 50.0;
            naive_rmse += (sq / 100.0).sqrt() / 50.0;
        }
        elpd_gap = elpd_gap.max((got_elpd - naive_elpd).abs());
        rmse_gap = rmse_gap.max((got_rmse - naive_rmse).abs());
    }
    let v = [-1e4, -1e4 - 1.0, -1e4 - 2.5];
    let shifted =
        -1e4 + ((0.0_f64).exp() + (-1.0_f64).exp() + (-2.5_f64).exp()).ln() - 3.0_f64.ln();
    let lme = log_mean_exp(&v);
    let stable = lme.is_finite() && (lme - shifted).abs() <= 1e-9;
    check(
        elpd_gap <= 1e-12 && rmse_gap <= 1e-12 && stable,
        format!("ELPD gap {elpd_gap:e}, RMSE gap {rmse_gap:e}, log-mean-exp at -1e4: {lme}"),
    )
}

fn covid_pipeline(out: &Path) -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        case_study: CaseStudy::Cs2_2,
        method: Method::PredictiveWeighting,
        beta_grid: vec![0.0, 1.0],
        preset: Preset::Desk,
        seeds: vec![0],
        output_dir: out.to_path_buf(),
        data_dir: Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data"),
        ..ExperimentConfig::default()
    };
    let summary = run_experiment(&cfg).map_err(|e| format!("pipeline did not run: {e}"))?;
    let dd = summary
        .rows
        .iter()
        .find(|r| r.beta == 0.0)
        .ok_or("no data-driven row")?;
    let sb = summary
        .rows
        .iter()
        .find(|r| r.beta == 1.0)
        .ok_or("no simulation-based row")?;
    let secs = start.elapsed().as_secs_f64();
    check(
        dd.elpd < sb.elpd && secs < 900.0,
        format!(
            "data-driven ELPD {:.4}, simulation-based {:.4} on {}, {secs:.0} s",
            dd.elpd, sb.elpd, dd.split
        ),
    )
}

fn run(id: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    let (tag, detail, ok) = match outcome {
        Ok(d) => ("PASS", d, true),
        Err(d) => ("FAIL", d, false),
    };
    println!("{tag} {id:>2} {name}: {detail} [{secs:.1} s]");
    ok
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let cs1 = desk_config(
        CaseStudy::Cs1,
        Method::Both,
        CS1_GRID.to_vec(),
        &tmp.path().join("cs1"),
    );
    let cs21 = desk_config(
        CaseStudy::Cs2_1,
        Method::PowerScaling,
        coarse_beta_grid(),
        &tmp.path().join("cs21"),
    );

    println!("acceptance: desk preset, seeds {SEEDS:?}");
    let sweep = |cfg: &ExperimentConfig| -> Vec<ResultRow> {
        let start = Instant::now();
        match run_experiment(cfg) {
            Ok(s) => {
                println!(
                    "sweep {:?}: {} rows in {:.0} s",
                    cfg.case_study,
                    s.rows.len(),
                    start.elapsed().as_secs_f64()
                );
                s.rows
            }
            Err(e) => {
                println!("sweep for {:?} failed: {e}", cfg.case_study);
                Vec::new()
            }
        }
    };
    let cs1_rows = sweep(&cs1);
    let cs21_rows = sweep(&cs21);

    let results = [
        run(1, "scaling schedule", scaling_schedule),
        run(2, "basis cardinalities", basis_cardinalities),
        run(3, "sampler correctness", sampler_correctness),
        run(4, "surrogate fidelity", surrogate_fidelity),
        run(5, "CS1 OOS ordering", || cs1_oos_ordering(&cs1_rows)),
        run(6, "CS1 OOD ordering", || cs1_ood_ordering(&cs1_rows)),
        run(7, "CS2.1 OOD interior optimum", || {
            cs21_interior_optimum(&cs21_rows)
        }),
        run(8, "endpoint identities", || {
            endpoint_identities(&cs1, &cs1_rows)
        }),
        run(9, "SIR solver", sir_solver),
        run(10, "distribution oracles", distribution_oracles),
        run(11, "metric oracles", metric_oracles),
        run(12, "CS2.2 pipeline", || {
            covid_pipeline(&tmp.path().join("cs22"))
        }),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
