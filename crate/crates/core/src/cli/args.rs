//! Command-line interface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::config::{ExperimentConfig, Method, Preset};
use super::experiment::{
    evaluate_run, generate_data, load_results, run_experiment, train_components, Component,
    RunSummary, THREADS_ENV,
};
use super::plot::emit_plot_data;
use super::report::render;
use super::CaseStudy;
use crate::error::Result;

/// Exit status of a successful run without gate failures.
pub const EXIT_OK: i32 = 0;
/// Exit status of a hard error.
pub const EXIT_ERROR: i32 = 1;
/// Exit status when some rows failed the convergence gate.
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "hybrid-surrogate",
    version,
    about = "Polynomial chaos surrogates trained on simulation and real-world data",
    after_help = concat!(
        "Exit status: 0 success, 2 convergence-gate failures present, 1 error.\n",
        "Set HYBRID_SURROGATE_THREADS to cap worker threads.\n",
        "Config defaults: case_study = cs1, method = both, beta_grid = 0, 0.05, ..., 1, ",
        "preset = desk, seeds = [0], output_dir = runs, data_dir = data, gate = 1.05."
    )
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Chain-length preset [default: desk].
    #[arg(long, value_enum, global = true)]
    pub preset: Option<Preset>,
    /// Run directory [default: runs].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Case study [default: cs1].
    #[arg(long, value_enum, global = true)]
    pub case_study: Option<CaseStudy>,
    /// Fusion methods to sweep [default: both].
    #[arg(long, value_enum, global = true)]
    pub method: Option<Method>,
    /// Comma-separated weighting factors [default: 0, 0.05, ..., 1].
    #[arg(long, value_delimiter = ',', global = true)]
    pub betas: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate or ingest the datasets and write them as CSV.
    GenData,
    /// Train single components and write their draws.
    Train {
        /// Weighting factor of a power-scaled fit; repeatable.
        #[arg(long)]
        beta: Vec<f64>,
        /// Also train the data-driven surrogate.
        #[arg(long)]
        data_driven: bool,
    },
    /// Run the full sweep and write every artifact.
    Sweep,
    /// Rescore a finished run from its persisted draws.
    Evaluate,
    /// Write plot-ready CSV bundles for a finished run.
    PlotData,
    /// Print a summary of a finished run's result table.
    Report,
}

impl GlobalArgs {
    /// Config file (or defaults) with command-line overrides applied.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seeds = vec![s];
        }
        if let Some(p) = self.preset {
            cfg.preset = p;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(c) = self.case_study {
            cfg.case_study = c;
        }
        if let Some(m) = self.method {
            cfg.method = m;
        }
        if let Some(b) = &self.betas {
            cfg.beta_grid = b.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn status(summary: &RunSummary) -> i32 {
    if summary.flagged > 0 {
        EXIT_NOT_CONVERGED
    } else {
        EXIT_OK
    }
}

/// Runs a parsed command and returns the exit status.
pub fn run(cli: Cli) -> Result<i32> {
    let cfg = cli.global.resolve()?;
    let run_dir = cfg.output_dir.clone();
    match cli.command {
        Command::GenData => {
            let data = generate_data(&cfg)?;
            for (seed, d) in cfg.seeds.iter().zip(&data) {
                println!(
                    "seed {seed}: {} simulation runs, {} real observations, splits {}",
                    d.sim.len(),
                    d.real.len(),
                    d.eval.labels().join(", ")
                );
            }
            Ok(EXIT_OK)
        }
        Command::Train { beta, data_driven } => {
            let mut comps: Vec<Component> =
                beta.iter().map(|&b| Component::PowerScaled(b)).collect();
            if data_driven {
                comps.insert(0, Component::DataDriven);
            }
            if comps.is_empty() {
                return Err(crate::Error::Config(
                    "train needs --beta or --data-driven".into(),
                ));
            }
            if let Some(b) = beta.iter().find(|b| !(0.0..=1.0).contains(*b)) {
                return Err(crate::Error::Config(format!("beta {b} is outside [0, 1]")));
            }
            let data = generate_data(&cfg)?;
            let mut code = EXIT_OK;
            for o in train_components(&cfg, &data, &comps)? {
                match &o.fit {
                    Ok(f) => {
                        let ok = f.converged(cfg.gate);
                        println!(
                            "seed {} {:?}: max R-hat {:.4}{} ({:.1} s)",
                            o.seed,
                            o.component,
                            f.max_rhat(),
                            if ok { "" } else { " NOT CONVERGED" },
                            o.wall_time_seconds
                        );
                        if !ok {
                            code = EXIT_NOT_CONVERGED;
                        }
                    }
                    Err(e) => {
                        println!("seed {} {:?}: failed: {e}", o.seed, o.component);
                        code = EXIT_NOT_CONVERGED;
                    }
                }
            }
            Ok(code)
        }
        Command::Sweep => {
            let summary = run_experiment(&cfg)?;
            print!("{}", render(&summary.rows));
            Ok(status(&summary))
        }
        Command::Evaluate => {
            let summary = evaluate_run(&run_dir)?;
            print!("{}", render(&summary.rows));
            Ok(status(&summary))
        }
        Command::PlotData => {
            for f in emit_plot_data(&run_dir)? {
                println!("{}", f.display());
            }
            Ok(EXIT_OK)
        }
        Command::Report => {
            let rows = load_results(&run_dir)?;
            print!("{}", render(&rows));
            let flagged = rows.iter().filter(|r| !r.converged).count();
            Ok(if flagged > 0 {
                EXIT_NOT_CONVERGED
            } else {
                EXIT_OK
            })
        }
    }
}

/// Parses `std::env::args`, runs, and maps errors to [`EXIT_ERROR`].
pub fn main_with_args() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, crate::Error::Config(ref m) if m.contains(THREADS_ENV)) {
                eprintln!("hint: unset {THREADS_ENV} or set it to a positive integer");
            }
            EXIT_ERROR
        }
    }
}
