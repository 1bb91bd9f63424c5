//! Case-study definitions: surrogate shapes, priors and data sources.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::ScalingSpec;
use crate::datagen::{
    covid_ingest, locate_csv, make_cs1_2_datasets, make_cs1_datasets, make_cs21_datasets,
    make_cs22_datasets, CaseStudyData, IngestOptions,
};
use crate::error::{Error, Result};
use crate::model::{
    HalfNormalPrior, LikelihoodFamily, NormalPrior, PriorSpec, SurrogateSpec, TruncatedNormal,
};

/// Polynomial degree used by every case study.
pub const MAX_DEGREE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CaseStudy {
    /// Logarithmic simulator with a periodic discrepancy, training on [1, 100].
    Cs1,
    /// As `cs1` with training on [1, 140].
    #[serde(rename = "cs1_2")]
    #[value(name = "cs1-2")]
    Cs1_2,
    /// Synthetic SIR data with a misspecified recovery rate.
    #[serde(rename = "cs2_1")]
    #[value(name = "cs2-1")]
    Cs2_1,
    /// SIR model against the COVID-19 first wave in Italy.
    #[serde(rename = "cs2_2")]
    #[value(name = "cs2-2")]
    Cs2_2,
}

impl CaseStudy {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseStudy::Cs1 => "cs1",
            CaseStudy::Cs1_2 => "cs1_2",
            CaseStudy::Cs2_1 => "cs2_1",
            CaseStudy::Cs2_2 => "cs2_2",
        }
    }

    pub fn family(self) -> LikelihoodFamily {
        match self {
            CaseStudy::Cs1 | CaseStudy::Cs1_2 => LikelihoodFamily::normal(),
            CaseStudy::Cs2_1 | CaseStudy::Cs2_2 => LikelihoodFamily::log_normal(1.0),
        }
    }

    /// Priors: `c_i ~ N(0, 5)`, `sigma ~ HalfNormal(0.5)` and the
    /// study-specific truncated normals on the latent inputs.
    pub fn prior(self) -> PriorSpec {
        let omega = match self {
            CaseStudy::Cs1 | CaseStudy::Cs1_2 => vec![TruncatedNormal::new(0.9, 0.05, 0.6, 1.4)],
            CaseStudy::Cs2_1 => vec![TruncatedNormal::new(2.0, 0.5, 1.0, 3.0)],
            CaseStudy::Cs2_2 => vec![
                TruncatedNormal::new(0.3, 0.1, 0.1, 1.3),
                TruncatedNormal::new(0.2, 0.1, 0.1, 1.0),
            ],
        };
        PriorSpec {
            coeff: NormalPrior {
                loc: 0.0,
                scale: 5.0,
            },
            sigma: HalfNormalPrior { scale: 0.5 },
            omega: Some(omega),
        }
    }

    /// Scaling bounds of the simulation design, known inputs first.
    pub fn bounds(self) -> Vec<(f64, f64)> {
        match self {
            CaseStudy::Cs1 | CaseStudy::Cs1_2 => vec![(1.0, 200.0), (0.6, 1.4)],
            CaseStudy::Cs2_1 => vec![(1.0, 14.0), (1.0, 3.0)],
            CaseStudy::Cs2_2 => vec![(0.1, 1.3), (1.0, 3.0), (0.1, 1.0)],
        }
    }

    pub fn names(self) -> (Vec<String>, Vec<String>) {
        let s = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        match self {
            CaseStudy::Cs1 | CaseStudy::Cs1_2 => (s(&["x"]), s(&["omega"])),
            CaseStudy::Cs2_1 => (s(&["t"]), s(&["xi"])),
            CaseStudy::Cs2_2 => (s(&["t"]), s(&["xi", "gamma"])),
        }
    }

    pub fn surrogate_spec(self) -> Result<SurrogateSpec> {
        let (inputs, omega) = self.names();
        SurrogateSpec::new(
            inputs,
            omega,
            ScalingSpec::new(self.bounds())?,
            MAX_DEGREE,
            self.family(),
            self.prior(),
        )
    }

    /// Builds or loads the datasets. The COVID study reads its CSV from
    /// `data_dir` or the path in `HYBRID_SURROGATE_COVID_CSV`.
    pub fn load(self, seed: u64, data_dir: &Path) -> Result<CaseStudyData> {
        match self {
            CaseStudy::Cs1 => make_cs1_datasets(seed),
            CaseStudy::Cs1_2 => make_cs1_2_datasets(seed),
            CaseStudy::Cs2_1 => make_cs21_datasets(seed),
            CaseStudy::Cs2_2 => {
                let path = locate_csv(data_dir).ok_or_else(|| {
                    Error::Config(format!(
                        "no COVID-19 CSV found in {} or via {}",
                        data_dir.display(),
                        crate::datagen::CSV_ENV
                    ))
                })?;
                let window = covid_ingest(&path, &IngestOptions::default())?;
                make_cs22_datasets(window.train, window.test)
            }
        }
    }
}

impl std::fmt::Display for CaseStudy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
