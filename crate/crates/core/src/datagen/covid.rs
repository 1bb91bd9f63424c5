//! Ingestion of daily national COVID-19 counts for Italy.

use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};

use super::RealDataset;
use crate::error::{Error, Result};
use crate::metrics::{EvalKind, EvaluationSet};

pub const ITALY_POPULATION: f64 = 60_421_760.0;
pub const TRAIN_DAYS: usize = 60;
pub const TEST_DAYS: usize = 14;
/// Environment variable pointing at a local copy of the CSV.
pub const CSV_ENV: &str = "HYBRID_SURROGATE_COVID_CSV";
/// Country-level file of the COVID-19 Data Hub.
pub const DATA_HUB_URL: &str = "https://storage.covid19datahub.io/country/ITA.csv";

pub fn window_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 2, 24).expect("valid date")
}

/// Model time for day `k` (1-based) of a window of `days` days.
pub fn day_to_t(k: usize, days: usize) -> f64 {
    0.1 + (k as f64 - 1.0) * 1.2 / (days as f64 - 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovidWindow {
    pub train: RealDataset,
    pub test: EvaluationSet,
    pub dates: Vec<NaiveDate>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    pub population: f64,
    pub train_days: usize,
    pub test_days: usize,
    pub start: NaiveDate,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            population: ITALY_POPULATION,
            train_days: TRAIN_DAYS,
            test_days: TEST_DAYS,
            start: window_start(),
        }
    }
}

/// Reads `date,confirmed,recovered` rows (extra columns and rows outside the
/// window are ignored) and returns infected cases per 10^5 people.
pub fn covid_ingest(path: &Path, opts: &IngestOptions) -> Result<CovidWindow> {
    let fail = |row: usize, message: String| Error::Ingest {
        path: path.to_path_buf(),
        row,
        message,
    };
    if !(opts.population > 0.0) || opts.train_days == 0 || opts.test_days == 0 {
        return Err(Error::InvalidInput(
            "population and window lengths must be positive".into(),
        ));
    }
    let days = opts.train_days + opts.test_days;
    let end = opts.start + Days::new(days as u64 - 1);

    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_path(path)
        .map_err(|e| fail(0, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| fail(1, e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| fail(1, format!("missing column `{name}`")))
    };
    let (c_date, c_conf, c_rec) = (column("date")?, column("confirmed")?, column("recovered")?);

    let mut infected: Vec<Option<f64>> = vec![None; days];
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| fail(row, e.to_string()))?;
        let field = |c: usize| record.get(c).unwrap_or("").trim();
        let date = NaiveDate::parse_from_str(field(c_date), "%Y-%m-%d")
            .map_err(|e| fail(row, format!("bad date `{}`: {e}", field(c_date))))?;
        if date < opts.start || date > end {
            continue;
        }
        let count = |c: usize, name: &str| -> Result<f64> {
            let s = field(c);
            let v: f64 = s
                .parse()
                .map_err(|_| fail(row, format!("bad {name} count `{s}`")))?;
            if !v.is_finite() || v < 0.0 || v.fract() != 0.0 {
                return Err(fail(
                    row,
                    format!("{name} count `{s}` is not a non-negative integer"),
                ));
            }
            Ok(v)
        };
        let confirmed = count(c_conf, "confirmed")?;
        let recovered = count(c_rec, "recovered")?;
        let active = confirmed - recovered;
        if active < 0.0 {
            return Err(fail(row, format!("negative infected count {active}")));
        }
        let k = (date - opts.start).num_days() as usize;
        if infected[k].is_some() {
            return Err(fail(row, format!("duplicate date {date}")));
        }
        infected[k] = Some(active / opts.population * 1e5);
    }

    let mut dates = Vec::with_capacity(days);
    let mut values = Vec::with_capacity(days);
    for (k, v) in infected.into_iter().enumerate() {
        let date = opts.start + Days::new(k as u64);
        match v {
            Some(v) => values.push(v),
            None => return Err(fail(0, format!("missing date {date}"))),
        }
        dates.push(date);
    }
    let t: Vec<Vec<f64>> = (1..=days).map(|k| vec![day_to_t(k, days)]).collect();
    let train = RealDataset::new(
        t[..opts.train_days].to_vec(),
        values[..opts.train_days].to_vec(),
    )?;
    let test = EvaluationSet::new(
        t[opts.train_days..].to_vec(),
        values[opts.train_days..].to_vec(),
        EvalKind::Noisy,
        "test",
    )?;
    Ok(CovidWindow { train, test, dates })
}

/// Looks for the CSV via the environment variable, then in `data_dir`.
pub fn locate_csv(data_dir: &Path) -> Option<PathBuf> {
    if let Some(p) = std::env::var_os(CSV_ENV).map(PathBuf::from) {
        if p.is_file() {
            return Some(p);
        }
    }
    let local = data_dir.join("covid_italy.csv");
    local.is_file().then_some(local)
}

/// Downloads the data hub file to `dest` unless it is already present.
#[cfg(feature = "fetch")]
pub fn fetch_csv(dest: &Path) -> Result<PathBuf> {
    if dest.is_file() {
        return Ok(dest.to_path_buf());
    }
    let body = reqwest::blocking::get(DATA_HUB_URL)
        .and_then(|r| r.error_for_status())
        .and_then(|r| r.bytes())
        .map_err(|e| Error::Config(format!("download of {DATA_HUB_URL} failed: {e}")))?;
    if let Some(dir) = dest.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(dest, &body).map_err(|e| Error::io(dest, e))?;
    Ok(dest.to_path_buf())
}
