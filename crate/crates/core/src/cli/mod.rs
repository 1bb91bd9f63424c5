//! Experiment orchestration: configuration, sweeps, persistence and
//! plot-ready output.

mod args;
mod config;
mod experiment;
mod io;
mod plot;
mod report;
mod study;

pub use args::{
    main_with_args, run, Cli, Command, GlobalArgs, EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK,
};
pub use config::{coarse_beta_grid, default_beta_grid, ExperimentConfig, Fusion, Method, Preset};
pub use experiment::{
    component_seeds, components, evaluate_run, generate_data, load_results, load_run, plot_grid,
    run_experiment, thread_pool, train_component, train_components, Component, FitOutcome,
    LoadedRun, ResultRow, RunPaths, RunSummary, StoredFit, TimingRow, PLOT_POINTS, QUANTILES,
    THREADS_ENV,
};
pub use io::{
    cache_key, load_datasets, load_draws, load_table, read_cache, save_datasets, save_draws,
    save_table, write_cache,
};
pub use plot::{emit_plot_data, SPAGHETTI_BETAS, SPAGHETTI_CURVES, SPAGHETTI_POINTS};
pub use report::{best_beta, render, summarize, CellSummary};
pub use study::{CaseStudy, MAX_DEGREE};
