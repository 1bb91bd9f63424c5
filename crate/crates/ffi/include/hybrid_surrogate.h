#ifndef HYBRID_SURROGATE_H
#define HYBRID_SURROGATE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Status codes.
typedef enum HsStatus {
  HS_STATUS_OK = 0,
  HS_STATUS_NULL_POINTER = 1,
  HS_STATUS_INVALID_ARGUMENT = 2,
  HS_STATUS_DOMAIN = 3,
  HS_STATUS_DIMENSION = 4,
  HS_STATUS_NOT_CONVERGED = 5,
  HS_STATUS_NUMERIC = 6,
  HS_STATUS_IO = 7,
  HS_STATUS_CONFIG = 8,
  HS_STATUS_PANIC = 9,
} HsStatus;

// Case studies, as accepted by [`hs_dataset_load`].
typedef enum HsCaseStudy {
  HS_CASE_STUDY_CS1 = 0,
  HS_CASE_STUDY_CS1_2 = 1,
  HS_CASE_STUDY_CS2_1 = 2,
  HS_CASE_STUDY_CS2_2 = 3,
} HsCaseStudy;

// Opaque dataset handle.
typedef struct HsDataset HsDataset;

// Opaque fitted-surrogate handle.
typedef struct HsFit HsFit;

// Chain lengths of both training stages.
typedef struct HsChainSettings {
  size_t n_chains;
  size_t warmup;
  size_t draws_per_chain;
  // Stage-1 draws refined in the second step.
  size_t thin_to;
  size_t inner_warmup;
  size_t inner_draws;
} HsChainSettings;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`) and returns the full length including the NUL, or 0
// when there is no error.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t hs_last_error_message(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *hs_version(void);

// Desk-scale chain settings.
struct HsChainSettings hs_chain_settings_desk(void);

// Likelihood exponents `(alpha_s, alpha_r)` for weighting factor `beta`.
//
// # Safety
// `alpha_s` and `alpha_r` must be valid for writes.
enum HsStatus hs_compute_scaling(double beta, double *alpha_s, double *alpha_r);

// Number of polynomials of total degree at most `degree` in `dims` inputs.
//
// # Safety
// `out` must be valid for writes.
enum HsStatus hs_basis_size(size_t dims, size_t degree, size_t *out);

// Generates (or, for the COVID study, reads from `data_dir`) a case study's
// datasets. `data_dir` may be null.
//
// # Safety
// `data_dir` must be null or a NUL-terminated string; `out` must be valid
// for writes.
enum HsStatus hs_dataset_load(int32_t case_study,
                              uint64_t seed,
                              const char *data_dir,
                              struct HsDataset **out);

// # Safety
// `ds` must be null or a handle from [`hs_dataset_load`] not yet freed.
void hs_dataset_free(struct HsDataset *ds);

// Sizes of the simulation data, real data and number of test splits.
//
// # Safety
// `ds` must be a live handle; the outputs must be valid for writes.
enum HsStatus hs_dataset_sizes(const struct HsDataset *ds,
                               size_t *n_sim,
                               size_t *n_real,
                               size_t *n_splits);

// Trains the data-driven surrogate on the real data.
//
// # Safety
// `ds` must be a live handle, `settings` valid for reads and `out` valid
// for writes.
enum HsStatus hs_fit_data_driven(const struct HsDataset *ds,
                                 const struct HsChainSettings *settings,
                                 uint64_t seed,
                                 struct HsFit **out);

// Trains the two-step power-scaled surrogate; `beta = 1` gives the
// simulation-based surrogate.
//
// # Safety
// As for [`hs_fit_data_driven`].
enum HsStatus hs_fit_power_scaled(const struct HsDataset *ds,
                                  double beta,
                                  const struct HsChainSettings *settings,
                                  uint64_t seed,
                                  struct HsFit **out);

// # Safety
// `fit` must be null or a live fit handle.
void hs_fit_free(struct HsFit *fit);

// Largest R-hat over all stages and parameters, and whether every stage
// passes `gate`.
//
// # Safety
// `fit` must be a live handle; outputs valid for writes.
enum HsStatus hs_fit_diagnostics(const struct HsFit *fit,
                                 double gate,
                                 double *max_rhat,
                                 bool *converged);

// Number of posterior rows used for prediction.
//
// # Safety
// `fit` must be a live handle; `out` valid for writes.
enum HsStatus hs_fit_n_draws(const struct HsFit *fit, size_t *out);

// Posterior mean of the predictive mean at `n_points` inputs stored
// row-major with `dim_x` values each.
//
// # Safety
// `x` must hold `n_points * dim_x` values and `out_mean` `n_points`.
enum HsStatus hs_fit_predict_mean(const struct HsFit *fit,
                                  const double *x,
                                  size_t n_points,
                                  size_t dim_x,
                                  double *out_mean);

// ELPD and RMSE of a fit on a named test split. `rmse` is NaN when the
// split has no noise-free truth.
//
// # Safety
// Handles must be live, `split` NUL-terminated, outputs valid for writes.
enum HsStatus hs_fit_score(const struct HsFit *fit,
                           const struct HsDataset *ds,
                           const char *split,
                           uint64_t seed,
                           double *out_elpd,
                           double *out_rmse);

// Runs the sweep described by a TOML configuration file and reports how
// many result rows failed the convergence gate.
//
// # Safety
// `config_path` must be NUL-terminated; `flagged` valid for writes.
enum HsStatus hs_run_experiment(const char *config_path, size_t *flagged);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYBRID_SURROGATE_H */
