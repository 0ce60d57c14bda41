/* C interface to the obsadj library. Handles are opaque; every call that can
 * fail returns an oa_status and leaves a message for oa_last_error(). */
#ifndef OBSADJ_OBSADJ_H
#define OBSADJ_OBSADJ_H

#include <stdint.h>

#if defined(OBSADJ_BUILDING)
#define OBSADJ_API __attribute__((visibility("default")))
#else
#define OBSADJ_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  OA_OK = 0,
  OA_INVALID_ARGUMENT = 1,
  OA_DIMENSION_MISMATCH = 2,
  OA_NOT_CONVERGED = 3,
  OA_SEPARABLE_DATA = 4,
  OA_KKT_VIOLATION = 5,
  OA_UNSUPPORTED = 6,
  OA_SINGULAR = 7,
  OA_DEGENERATE = 8,
  OA_MISSING_TRUTH = 9,
  OA_IO = 10,
  OA_INTERNAL = 99
} oa_status;

typedef struct oa_dataset oa_dataset;
typedef struct oa_fit oa_fit;

/* Message of the last failed call on this thread; "" if none. */
OBSADJ_API const char* oa_last_error(void);
OBSADJ_API const char* oa_version(void);
OBSADJ_API const char* oa_status_name(oa_status s);

/* ---- datasets ---- */

/* X is row-major n x p; y has n entries. Both are copied. */
OBSADJ_API oa_status oa_dataset_create(const double* X, const double* y, int64_t n, int64_t p, oa_dataset** out);
/* Simulates the dataset that replication seed `seed` of an experiment config
 * sees for dims entry `dims_index` and link `link_index`. */
OBSADJ_API oa_status oa_dataset_simulate(const char* config_json, int full, int dims_index, int link_index,
                                         uint64_t seed, oa_dataset** out);
/* Covariance c * I. */
OBSADJ_API oa_status oa_dataset_set_covariance_scaled(oa_dataset* ds, double c);
/* Explicit symmetric positive definite p x p covariance, row-major. */
OBSADJ_API oa_status oa_dataset_set_covariance(oa_dataset* ds, const double* sigma);
/* Index direction w (normalized internally) and optional coefficient vector
 * (may be NULL). */
OBSADJ_API oa_status oa_dataset_set_truth(oa_dataset* ds, const double* w, const double* beta_star);
OBSADJ_API oa_status oa_dataset_dims(const oa_dataset* ds, int64_t* n, int64_t* p);
/* 0: identity-scaled, 1: explicit, -1: none. `scale` receives c when 0. */
OBSADJ_API oa_status oa_dataset_covariance(const oa_dataset* ds, int* kind, double* scale, double* sigma_or_null);
OBSADJ_API int oa_dataset_has_truth(const oa_dataset* ds);

typedef enum { OA_DATA_X = 0, OA_DATA_Y = 1, OA_DATA_INDEX = 2, OA_DATA_BETA_STAR = 3 } oa_data_field;
/* Copies a field into buf (len entries; X is row-major n*p). */
OBSADJ_API oa_status oa_dataset_copy(const oa_dataset* ds, oa_data_field field, double* buf, int64_t len);
OBSADJ_API void oa_dataset_free(oa_dataset* ds);

/* ---- fitting ---- */

typedef struct {
  const char* loss;      /* square | huber | logistic | logistic-pm | binomial:<q> */
  const char* penalty;   /* none | ridge | l1 | elastic-net */
  const char* scaling;   /* ridge: per-p | per-p-alt | per-n; l1: per-sqrt-n | per-p | plain */
  double lambda;
  double lambda2;        /* elastic-net quadratic level */
  const char* algorithm; /* auto | newton | prox-gradient | coordinate-descent */
  double kkt_tol;
  int max_iter;
  int use_coercive;      /* nonzero: coercive guard with level coercive_K */
  double coercive_K;
} oa_fit_options;

OBSADJ_API void oa_fit_options_init(oa_fit_options* opts);

OBSADJ_API oa_status oa_fit_create(const oa_dataset* ds, const oa_fit_options* opts, oa_fit** out);
/* Rebuilds a fit from a stored coefficient vector (no solve). */
OBSADJ_API oa_status oa_fit_from_beta(const oa_dataset* ds, const oa_fit_options* opts, const double* beta,
                                      oa_fit** out);

typedef struct {
  double objective;
  double kkt_residual;
  int converged;
  int guard_active;
  int iterations;
  int64_t support_size;
  int64_t p;
} oa_fit_info;

OBSADJ_API oa_status oa_fit_get_info(const oa_fit* fit, oa_fit_info* out);

typedef enum { OA_FIT_BETA = 0, OA_FIT_PSI = 1, OA_FIT_CURVATURE = 2, OA_FIT_LINEAR_PREDICTOR = 3 } oa_fit_field;
OBSADJ_API oa_status oa_fit_copy(const oa_fit* fit, oa_fit_field field, double* buf, int64_t len);
OBSADJ_API void oa_fit_free(oa_fit* fit);

/* ---- adjustments and inference ---- */

typedef struct {
  double df, v, r2, gamma, t2, a2, sigma2;
  double trace_v, trace_d;
  int degenerate_branch;
} oa_adjustments;

typedef struct {
  double a_star, sigma_star2, gamma_star, t_star;
} oa_oracle;

/* variant: general | tilde | unregularized | square-loss | huber |
 * ridge-simplified, or NULL for the default of the fit. */
OBSADJ_API oa_status oa_adjust(const oa_dataset* ds, const oa_fit* fit, const char* variant, oa_adjustments* out);
OBSADJ_API oa_status oa_oracle_compute(const oa_dataset* ds, const oa_fit* fit, oa_oracle* out);
/* source: exact | estimate. Writes p entries of diag(Omega). */
OBSADJ_API oa_status oa_omega(const oa_dataset* ds, const char* source, double* buf, int64_t len);

typedef struct {
  int64_t j;
  double beta, beta_d, center, lo, hi, stat;
  int reject;
} oa_infer_row;

/* One row per coordinate. When the estimated signal is zero the interval
 * fields are NaN and *ci_available is set to 0. */
OBSADJ_API oa_status oa_infer(const oa_dataset* ds, const oa_fit* fit, const char* variant, double alpha,
                              const char* omega_source, oa_infer_row* rows, int64_t len, int* ci_available);
OBSADJ_API oa_status oa_signal_strength(const oa_dataset* ds, const oa_fit* fit, const char* variant, double* out);

/* ---- presets and experiments ---- */

OBSADJ_API int oa_preset_count(void);
OBSADJ_API const char* oa_preset_name(int i);
/* JSON text of a built-in preset, owned by the library. */
OBSADJ_API oa_status oa_preset_json(const char* name, const char** out);

typedef struct {
  int full;
  int workers;   /* 0: environment or hardware default */
  int reps;      /* 0: from config */
  int has_seed;
  uint64_t seed;
} oa_experiment_options;

OBSADJ_API void oa_experiment_options_init(oa_experiment_options* opts);
/* Runs an experiment and writes its outputs to out_dir (skipped when NULL).
 * *summary_json receives the summary; release it with oa_string_free. */
OBSADJ_API oa_status oa_experiment_run(const char* config_json, const oa_experiment_options* opts,
                                       const char* out_dir, char** summary_json);
OBSADJ_API void oa_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
