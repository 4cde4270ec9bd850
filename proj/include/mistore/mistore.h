#ifndef MISTORE_H
#define MISTORE_H

/*
 * C interface to the mistore library.
 *
 * Every fallible call returns a mistore_status. On failure the message is
 * available from mistore_last_error() on the calling thread until the next
 * failing call. Handles are opaque and must be released with the matching
 * _free function; passing NULL to a _free function is a no-op.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MISTORE_BUILDING_LIBRARY)
#    define MISTORE_API __declspec(dllexport)
#  else
#    define MISTORE_API __declspec(dllimport)
#  endif
#else
#  define MISTORE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mistore_status {
  MISTORE_OK = 0,
  MISTORE_E_USAGE = 1,     /* invalid argument or configuration */
  MISTORE_E_DATA = 2,      /* unusable input data */
  MISTORE_E_NUMERICAL = 3, /* unstable model, solver failure */
  MISTORE_E_INTERNAL = 4
} mistore_status;

typedef struct mistore_model mistore_model;
typedef struct mistore_profile mistore_profile;
typedef struct mistore_fit mistore_fit;
typedef struct mistore_study mistore_study;

MISTORE_API const char* mistore_version(void);
MISTORE_API const char* mistore_last_error(void);

/* Models ------------------------------------------------------------- */

/* a[0..p) are the coefficients of x[n] = sum a_k x[n-k] + ... */
MISTORE_API mistore_status mistore_model_from_ar(const double* a, size_t p, double d,
                                                 double sigma2, mistore_model** out);
/* One complex-conjugate pole pair per (modulus, frequency). */
MISTORE_API mistore_status mistore_model_from_poles(const double* moduli, const double* frequencies,
                                                    size_t npairs, double d, double sigma2,
                                                    mistore_model** out);
MISTORE_API void mistore_model_free(mistore_model* model);

MISTORE_API double mistore_model_d(const mistore_model* model);
MISTORE_API double mistore_model_sigma2(const mistore_model* model);
/* Copies up to capacity AR coefficients, returns the order p. */
MISTORE_API size_t mistore_model_ar(const mistore_model* model, double* out, size_t capacity);
/* Nonzero when d lies outside the range where truncation is recommended. */
MISTORE_API int mistore_model_d_warning(const mistore_model* model);

/* Theoretical multiscale storage ---------------------------------------- */

typedef struct mistore_scale_entry {
  int tau;
  double f_tau;
  double storage;
  double sigma2_x;
  double sigma2_e;
  double lyapunov_residual;
  double dare_residual;
  int dare_iterations;
} mistore_scale_entry;

/* q: truncation lag, r: FIR order (even). */
MISTORE_API mistore_status mistore_profile_compute(const mistore_model* model, int q, int r,
                                                   const int* taus, size_t ntaus,
                                                   mistore_profile** out);
MISTORE_API void mistore_profile_free(mistore_profile* profile);
MISTORE_API size_t mistore_profile_size(const mistore_profile* profile);
MISTORE_API mistore_status mistore_profile_entry(const mistore_profile* profile, size_t index,
                                                 mistore_scale_entry* out);
MISTORE_API size_t mistore_profile_warning_count(const mistore_profile* profile);
MISTORE_API const char* mistore_profile_warning(const mistore_profile* profile, size_t index);

/* Estimation -------------------------------------------------------------- */

typedef enum mistore_fit_mode {
  MISTORE_FIT_EAR = 0,
  MISTORE_FIT_EARD = 1,
  MISTORE_FIT_EARFI = 2
} mistore_fit_mode;

typedef struct mistore_fit_config {
  mistore_fit_mode mode;
  int q;
  int pmin;
  int pmax;
  double bandwidth_exponent;
  int remove_mean;
} mistore_fit_config;

typedef struct mistore_fit_summary {
  double d_hat;
  double d_stderr;
  double d_null_lo; /* 0.05-level acceptance region of d == 0 */
  double d_null_hi;
  int d_significant; /* 0 in ear mode, where d is not estimated */
  int p_selected;
  double sigma2;
  int n_used;
} mistore_fit_summary;

MISTORE_API void mistore_fit_config_default(mistore_fit_config* config);
MISTORE_API mistore_status mistore_fit_series(const double* x, size_t n,
                                              const mistore_fit_config* config, mistore_fit** out);
MISTORE_API void mistore_fit_free(mistore_fit* fit);
MISTORE_API mistore_status mistore_fit_get_summary(const mistore_fit* fit, mistore_fit_summary* out);
MISTORE_API size_t mistore_fit_ar(const mistore_fit* fit, double* out, size_t capacity);
/* BIC value for orders pmin, pmin + 1, ... */
MISTORE_API size_t mistore_fit_bic(const mistore_fit* fit, double* out, size_t capacity);
MISTORE_API size_t mistore_fit_warning_count(const mistore_fit* fit);
MISTORE_API const char* mistore_fit_warning(const mistore_fit* fit, size_t index);
/* The fitted ARFI model, owned by the caller. */
MISTORE_API mistore_status mistore_fit_model(const mistore_fit* fit, mistore_model** out);

/* Simulation -------------------------------------------------------------- */

/* Writes n samples of replicate `replicate` into out. burnin < 0 selects the
 * default of 1000 + q. */
MISTORE_API mistore_status mistore_simulate(const mistore_model* model, int q, size_t n,
                                            uint64_t seed, int replicate, long long burnin,
                                            double* out);

/* Refined multiscale entropy ---------------------------------------------- */

typedef enum mistore_tolerance_basis {
  MISTORE_TOL_SERIES_SD = 0,
  MISTORE_TOL_INNOVATION_SD = 1
} mistore_tolerance_basis;

/* *defined is set to 0 (and *out to NaN) when Sample Entropy is undefined. */
MISTORE_API mistore_status mistore_sample_entropy(const double* x, size_t n, int m,
                                                  double r_factor, mistore_tolerance_basis basis,
                                                  double* out, int* defined);
/* out[k] is the storage at taus[k], NaN where undefined. */
MISTORE_API mistore_status mistore_rmse_storage(const double* x, size_t n, const int* taus,
                                                size_t ntaus, int m, double r_factor,
                                                mistore_tolerance_basis basis, double* out);

/* Study -------------------------------------------------------------------- */

typedef struct mistore_study_cell {
  const char* label;
  const char* poles;     /* "modulus:frequency,..." */
  const char* estimator; /* earfi, ear, eard or rmse */
  double d;
  size_t n;
  size_t failures;
} mistore_study_cell;

typedef struct mistore_study_row {
  int tau;
  double f_tau;
  double theory;
  double median;
  double p10;
  double p90;
  double missing_fraction;
} mistore_study_row;

/* Parses the key = value configuration text and runs the whole grid. */
MISTORE_API mistore_status mistore_study_run(const char* config_text, mistore_study** out);
MISTORE_API void mistore_study_free(mistore_study* study);
/* Fully resolved configuration, in the same key = value format. */
MISTORE_API const char* mistore_study_config(const mistore_study* study);
MISTORE_API size_t mistore_study_cell_count(const mistore_study* study);
MISTORE_API size_t mistore_study_tau_count(const mistore_study* study);
MISTORE_API mistore_status mistore_study_get_cell(const mistore_study* study, size_t cell,
                                                  mistore_study_cell* out);
MISTORE_API mistore_status mistore_study_get_row(const mistore_study* study, size_t cell,
                                                 size_t row, mistore_study_row* out);
MISTORE_API const char* mistore_study_failure(const mistore_study* study, size_t cell,
                                              size_t index);
MISTORE_API double mistore_study_max_residual(const mistore_study* study);

#ifdef __cplusplus
}
#endif

#endif /* MISTORE_H */
