//! Designs, simulators, noise models and dataset recipes.

mod cases;
mod covid;
mod dataset;
mod negbin;
mod sir;
mod sobol;

pub use cases::{
    cell_midpoints, cs1_simulator, cs1_truth, linspace, make_cs1_2_datasets, make_cs1_datasets,
    make_cs1_with_layout, make_cs21_datasets, make_cs22_datasets, make_cs22_simulation,
    CaseStudyData, Cs1Layout, EvalSplit, EvaluationSplits, NoiseModel, SyntheticTruthConfig,
    CS1_NOISE_SD, CS21_GAMMA_REAL, CS21_GAMMA_SIM, CS21_I0, CS21_PHI, CS21_POPULATION,
    CS21_XI_REAL, CS22_POPULATION,
};
#[cfg(feature = "fetch")]
pub use covid::fetch_csv;
pub use covid::{
    covid_ingest, day_to_t, locate_csv, window_start, CovidWindow, IngestOptions, CSV_ENV,
    DATA_HUB_URL, ITALY_POPULATION, TEST_DAYS, TRAIN_DAYS,
};
pub use dataset::{RealDataset, SimulationDataset};
pub use negbin::{negbin_log_pmf, negbin_sample};
pub use sir::{infected_at, sir_solve, SirConfig, SirTrajectory, DEFAULT_MAX_STEP};
pub use sobol::{sobol_points, sobol_scaled, MAX_DIMS as SOBOL_MAX_DIMS};
