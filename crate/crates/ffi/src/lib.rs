//! C ABI over the hybrid-surrogate library.
//!
//! Every fallible function returns an [`HsStatus`]; on failure the message
//! is available from [`hs_last_error_message`] on the same thread. Handles
//! are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use hybrid_surrogate::basis::MultiIndexSet;
use hybrid_surrogate::cli::{run_experiment, CaseStudy, ExperimentConfig, StoredFit};
use hybrid_surrogate::datagen::CaseStudyData;
use hybrid_surrogate::metrics::{elpd, rmse};
use hybrid_surrogate::predict::{predictive_draws, PredictiveSource};
use hybrid_surrogate::sampler::{sub_seed, ChainConfig};
use hybrid_surrogate::train::{compute_scaling, train_data_driven, train_hybrid, RefineConfig};
use hybrid_surrogate::Error;

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Dimension = 4,
    NotConverged = 5,
    Numeric = 6,
    Io = 7,
    Config = 8,
    Panic = 9,
}

/// Case studies, as accepted by [`hs_dataset_load`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsCaseStudy {
    Cs1 = 0,
    Cs1_2 = 1,
    Cs2_1 = 2,
    Cs2_2 = 3,
}

/// Chain lengths of both training stages.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HsChainSettings {
    pub n_chains: usize,
    pub warmup: usize,
    pub draws_per_chain: usize,
    /// Stage-1 draws refined in the second step.
    pub thin_to: usize,
    pub inner_warmup: usize,
    pub inner_draws: usize,
}

/// Opaque dataset handle.
pub struct HsDataset {
    study: CaseStudy,
    data: CaseStudyData,
}

/// Opaque fitted-surrogate handle.
pub struct HsFit {
    fit: StoredFit,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HsStatus {
    match e {
        Error::Domain(_) => HsStatus::Domain,
        Error::Dimension(_) => HsStatus::Dimension,
        Error::InvalidInput(_) => HsStatus::InvalidArgument,
        Error::NotConverged { .. } => HsStatus::NotConverged,
        Error::NanLogDensity { .. }
        | Error::Initialization { .. }
        | Error::RefinementDiverged { .. }
        | Error::Solver { .. } => HsStatus::Numeric,
        Error::Io { .. } | Error::Ingest { .. } | Error::Csv(_) => HsStatus::Io,
        Error::Config(_) => HsStatus::Config,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (HsStatus, String)>) -> HsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside the library".into());
            HsStatus::Panic
        }
    }
}

fn lib<T>(r: hybrid_surrogate::Result<T>) -> Result<T, (HsStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (HsStatus, String) {
    (HsStatus::NullPointer, format!("`{name}` is null"))
}

fn invalid(msg: impl Into<String>) -> (HsStatus, String) {
    (HsStatus::InvalidArgument, msg.into())
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, (HsStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("`{name}` is not UTF-8")))
}

fn study_of(code: i32) -> Result<CaseStudy, (HsStatus, String)> {
    Ok(match code {
        0 => CaseStudy::Cs1,
        1 => CaseStudy::Cs1_2,
        2 => CaseStudy::Cs2_1,
        3 => CaseStudy::Cs2_2,
        _ => return Err(invalid(format!("unknown case study {code}"))),
    })
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full length including the NUL, or 0
/// when there is no error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn hs_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Desk-scale chain settings.
#[no_mangle]
pub extern "C" fn hs_chain_settings_desk() -> HsChainSettings {
    let s1 = ChainConfig::desk();
    let s2 = RefineConfig::desk();
    HsChainSettings {
        n_chains: s1.n_chains,
        warmup: s1.warmup,
        draws_per_chain: s1.draws_per_chain,
        thin_to: s2.thin_to,
        inner_warmup: s2.chain.warmup,
        inner_draws: s2.chain.draws_per_chain,
    }
}

fn configs(s: &HsChainSettings, seed: u64) -> (ChainConfig, RefineConfig) {
    let s1 = ChainConfig {
        n_chains: s.n_chains,
        warmup: s.warmup,
        draws_per_chain: s.draws_per_chain,
        ..ChainConfig::desk()
    }
    .with_seed(seed);
    let mut s2 = RefineConfig::desk().with_seed(sub_seed(seed, 1));
    s2.thin_to = s.thin_to;
    s2.chain.warmup = s.inner_warmup;
    s2.chain.draws_per_chain = s.inner_draws;
    (s1, s2)
}

/// Likelihood exponents `(alpha_s, alpha_r)` for weighting factor `beta`.
///
/// # Safety
/// `alpha_s` and `alpha_r` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hs_compute_scaling(
    beta: f64,
    alpha_s: *mut f64,
    alpha_r: *mut f64,
) -> HsStatus {
    guard(|| {
        if alpha_s.is_null() || alpha_r.is_null() {
            return Err(null("alpha"));
        }
        let w = lib(compute_scaling(beta))?;
        *alpha_s = w.alpha_s;
        *alpha_r = w.alpha_r;
        Ok(())
    })
}

/// Number of polynomials of total degree at most `degree` in `dims` inputs.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hs_basis_size(dims: usize, degree: usize, out: *mut usize) -> HsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = lib(MultiIndexSet::total_degree(dims, degree))?.len();
        Ok(())
    })
}

/// Generates (or, for the COVID study, reads from `data_dir`) a case study's
/// datasets. `data_dir` may be null.
///
/// # Safety
/// `data_dir` must be null or a NUL-terminated string; `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn hs_dataset_load(
    case_study: i32,
    seed: u64,
    data_dir: *const c_char,
    out: *mut *mut HsDataset,
) -> HsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let study = study_of(case_study)?;
        let dir = if data_dir.is_null() {
            "data"
        } else {
            str_arg(data_dir, "data_dir")?
        };
        let data = lib(study.load(seed, Path::new(dir)))?;
        *out = Box::into_raw(Box::new(HsDataset { study, data }));
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or a handle from [`hs_dataset_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hs_dataset_free(ds: *mut HsDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Sizes of the simulation data, real data and number of test splits.
///
/// # Safety
/// `ds` must be a live handle; the outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hs_dataset_sizes(
    ds: *const HsDataset,
    n_sim: *mut usize,
    n_real: *mut usize,
    n_splits: *mut usize,
) -> HsStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("ds"))?;
        if n_sim.is_null() || n_real.is_null() || n_splits.is_null() {
            return Err(null("output"));
        }
        *n_sim = ds.data.sim.len();
        *n_real = ds.data.real.len();
        *n_splits = ds.data.eval.splits.len();
        Ok(())
    })
}

/// Trains the data-driven surrogate on the real data.
///
/// # Safety
/// `ds` must be a live handle, `settings` valid for reads and `out` valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn hs_fit_data_driven(
    ds: *const HsDataset,
    settings: *const HsChainSettings,
    seed: u64,
    out: *mut *mut HsFit,
) -> HsStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("ds"))?;
        let s = settings.as_ref().ok_or_else(|| null("settings"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = lib(ds.study.surrogate_spec())?;
        let (s1, _) = configs(s, seed);
        let fit = lib(train_data_driven(&ds.data.real, &spec, &s1, None))?;
        *out = Box::into_raw(Box::new(HsFit {
            fit: StoredFit::from_data_driven(&fit),
        }));
        Ok(())
    })
}

/// Trains the two-step power-scaled surrogate; `beta = 1` gives the
/// simulation-based surrogate.
///
/// # Safety
/// As for [`hs_fit_data_driven`].
#[no_mangle]
pub unsafe extern "C" fn hs_fit_power_scaled(
    ds: *const HsDataset,
    beta: f64,
    settings: *const HsChainSettings,
    seed: u64,
    out: *mut *mut HsFit,
) -> HsStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("ds"))?;
        let s = settings.as_ref().ok_or_else(|| null("settings"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = lib(ds.study.surrogate_spec())?;
        let (s1, s2) = configs(s, seed);
        let fit = lib(train_hybrid(
            &ds.data.sim,
            &ds.data.real,
            beta,
            &spec,
            &s1,
            &s2,
            None,
        ))?;
        *out = Box::into_raw(Box::new(HsFit {
            fit: lib(StoredFit::from_hybrid(&fit))?,
        }));
        Ok(())
    })
}

/// # Safety
/// `fit` must be null or a live fit handle.
#[no_mangle]
pub unsafe extern "C" fn hs_fit_free(fit: *mut HsFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Largest R-hat over all stages and parameters, and whether every stage
/// passes `gate`.
///
/// # Safety
/// `fit` must be a live handle; outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hs_fit_diagnostics(
    fit: *const HsFit,
    gate: f64,
    max_rhat: *mut f64,
    converged: *mut bool,
) -> HsStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        if max_rhat.is_null() || converged.is_null() {
            return Err(null("output"));
        }
        *max_rhat = f.fit.max_rhat();
        *converged = f.fit.converged(gate);
        Ok(())
    })
}

/// Number of posterior rows used for prediction.
///
/// # Safety
/// `fit` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hs_fit_n_draws(fit: *const HsFit, out: *mut usize) -> HsStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = f.fit.rows().len();
        Ok(())
    })
}

/// Posterior mean of the predictive mean at `n_points` inputs stored
/// row-major with `dim_x` values each.
///
/// # Safety
/// `x` must hold `n_points * dim_x` values and `out_mean` `n_points`.
#[no_mangle]
pub unsafe extern "C" fn hs_fit_predict_mean(
    fit: *const HsFit,
    x: *const f64,
    n_points: usize,
    dim_x: usize,
    out_mean: *mut f64,
) -> HsStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        if n_points == 0 {
            return Ok(());
        }
        if x.is_null() || out_mean.is_null() {
            return Err(null("x or out_mean"));
        }
        if dim_x != f.fit.spec().dim_x() {
            return Err((
                HsStatus::Dimension,
                format!(
                    "surrogate has {} known inputs, got {dim_x}",
                    f.fit.spec().dim_x()
                ),
            ));
        }
        let raw = std::slice::from_raw_parts(x, n_points * dim_x);
        let inputs: Vec<Vec<f64>> = raw.chunks_exact(dim_x).map(<[f64]>::to_vec).collect();
        let pred = lib(predictive_draws(&f.fit, &inputs, 0))?;
        let out = std::slice::from_raw_parts_mut(out_mean, n_points);
        let n = pred.n_draws() as f64;
        for (i, o) in out.iter_mut().enumerate() {
            *o = pred.mu_draws().iter().map(|d| d[i]).sum::<f64>() / n;
        }
        Ok(())
    })
}

/// ELPD and RMSE of a fit on a named test split. `rmse` is NaN when the
/// split has no noise-free truth.
///
/// # Safety
/// Handles must be live, `split` NUL-terminated, outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hs_fit_score(
    fit: *const HsFit,
    ds: *const HsDataset,
    split: *const c_char,
    seed: u64,
    out_elpd: *mut f64,
    out_rmse: *mut f64,
) -> HsStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        let ds = ds.as_ref().ok_or_else(|| null("ds"))?;
        let label = str_arg(split, "split")?;
        if out_elpd.is_null() || out_rmse.is_null() {
            return Err(null("output"));
        }
        let s = ds
            .data
            .eval
            .get(label)
            .ok_or_else(|| invalid(format!("no split named `{label}`")))?;
        let pred = lib(predictive_draws(&f.fit, s.noisy.inputs(), seed))?;
        *out_elpd = lib(elpd(&pred, &s.noisy))?;
        *out_rmse = match &s.truth {
            Some(t) => lib(rmse(&pred, t))?,
            None => f64::NAN,
        };
        Ok(())
    })
}

/// Runs the sweep described by a TOML configuration file and reports how
/// many result rows failed the convergence gate.
///
/// # Safety
/// `config_path` must be NUL-terminated; `flagged` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hs_run_experiment(
    config_path: *const c_char,
    flagged: *mut usize,
) -> HsStatus {
    guard(|| {
        let path = str_arg(config_path, "config_path")?;
        if flagged.is_null() {
            return Err(null("flagged"));
        }
        let cfg = lib(ExperimentConfig::load(Path::new(path)))?;
        *flagged = lib(run_experiment(&cfg))?.flagged;
        Ok(())
    })
}
