//! Experiment configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CaseStudy;
use crate::error::{Error, Result};
use crate::sampler::ChainConfig;
use crate::train::{RefineConfig, RHAT_GATE};

/// Which fusion schemes a sweep runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PowerScaling,
    PredictiveWeighting,
    Both,
}

impl Method {
    pub fn schemes(self) -> Vec<Fusion> {
        match self {
            Method::PowerScaling => vec![Fusion::PowerScaling],
            Method::PredictiveWeighting => vec![Fusion::PredictiveWeighting],
            Method::Both => vec![Fusion::PowerScaling, Fusion::PredictiveWeighting],
        }
    }
}

/// A single fusion scheme, as recorded in result rows.
#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    Hash,
    PartialOrd,
    Ord,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum Fusion {
    PowerScaling,
    PredictiveWeighting,
}

impl Fusion {
    pub fn as_str(self) -> &'static str {
        match self {
            Fusion::PowerScaling => "power_scaling",
            Fusion::PredictiveWeighting => "predictive_weighting",
        }
    }
}

/// Chain-length presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Stage 1: 4 chains of 500 + 250; stage 2: 200 refined draws.
    Desk,
    /// Stage 1: 4 chains of 1000 + 250; stage 2: every draw refined with
    /// 4 chains of 1000 + 250.
    Paper,
}

impl Preset {
    pub fn stage1(self) -> ChainConfig {
        match self {
            Preset::Desk => ChainConfig::desk(),
            Preset::Paper => ChainConfig::paper(),
        }
    }

    pub fn stage2(self) -> RefineConfig {
        match self {
            Preset::Desk => RefineConfig::desk(),
            Preset::Paper => RefineConfig::paper(),
        }
    }
}

/// `0, 0.05, ..., 1`.
pub fn default_beta_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 / 20.0).collect()
}

/// `0, 0.1, ..., 1`.
pub fn coarse_beta_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

/// One experiment: a case study swept over weighting factors and seeds.
///
/// `stage1` and `stage2` override the preset's chain settings when given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub case_study: CaseStudy,
    pub method: Method,
    pub beta_grid: Vec<f64>,
    pub preset: Preset,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Directory searched for external data files.
    pub data_dir: PathBuf,
    /// R-hat threshold below which a row counts as converged.
    pub gate: f64,
    pub stage1: Option<ChainConfig>,
    pub stage2: Option<RefineConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            case_study: CaseStudy::Cs1,
            method: Method::Both,
            beta_grid: default_beta_grid(),
            preset: Preset::Desk,
            seeds: vec![0],
            output_dir: PathBuf::from("runs"),
            data_dir: PathBuf::from("data"),
            gate: RHAT_GATE,
            stage1: None,
            stage2: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.beta_grid;
        if g.is_empty() {
            return Err(Error::Config("beta_grid is empty".into()));
        }
        if g.iter().any(|b| !(0.0..=1.0).contains(b)) {
            return Err(Error::Config("beta values must lie in [0, 1]".into()));
        }
        if g.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("beta_grid must be sorted and unique".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds is empty".into()));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("seeds must be unique".into()));
        }
        if !(self.gate >= 1.0) {
            return Err(Error::Config("gate must be at least 1".into()));
        }
        let s1 = self.stage1_config();
        s1.validate()?;
        let s2 = self.stage2_config();
        s2.chain.validate()?;
        if s2.thin_to == 0 || s2.thin_to > s1.n_chains * s1.draws_per_chain {
            return Err(Error::Config(format!(
                "stage2.thin_to = {} must lie in 1..={}",
                s2.thin_to,
                s1.n_chains * s1.draws_per_chain
            )));
        }
        Ok(())
    }

    pub fn stage1_config(&self) -> ChainConfig {
        self.stage1.clone().unwrap_or_else(|| self.preset.stage1())
    }

    pub fn stage2_config(&self) -> RefineConfig {
        self.stage2.clone().unwrap_or_else(|| self.preset.stage2())
    }
}
