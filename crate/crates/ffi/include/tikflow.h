#ifndef TIKFLOW_H
#define TIKFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

/*
 Result code of every fallible call.
 */
typedef enum TfStatus {
  TF_STATUS_OK = 0,
  TF_STATUS_NULL_POINTER = 1,
  TF_STATUS_INVALID_INPUT = 2,
  TF_STATUS_DIMENSION_MISMATCH = 3,
  TF_STATUS_CONVERGENCE = 4,
  TF_STATUS_INTEGRATION = 5,
  TF_STATUS_NUMERIC = 6,
  TF_STATUS_IO = 7,
  TF_STATUS_PANIC = 8,
} TfStatus;

typedef enum TfRegime {
  TF_REGIME_WEAK = 0,
  TF_REGIME_STRONG = 1,
  TF_REGIME_CRITICAL = 2,
  TF_REGIME_OUTSIDE = 3,
} TfRegime;

typedef struct TfObjective TfObjective;

typedef struct TfTrajectory TfTrajectory;

/*
 `α, q, γ, β` and the starting time `t0`.
 */
typedef struct TfDynamicsParams {
  double alpha;
  double q;
  double gamma;
  double beta;
  double t0;
} TfDynamicsParams;

/*
 Parameters of the discrete algorithm; `eps_n = a * n^-p`.
 */
typedef struct TfDiscreteParams {
  double alpha;
  double q;
  double gamma;
  double beta;
  double s;
  double a;
  double p;
} TfDiscreteParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null after a success.
 Valid until the next `tf_*` call on the same thread.
 */
const char *tf_last_error(void);

/*
 Looks up `id` in the built-in corpus.

 # Safety
 `id` must be a nul-terminated string; `out` must be writable.
 */
enum TfStatus tf_objective_from_corpus(const char *id, struct TfObjective **out);

/*
 Builds an objective from a JSON definition, e.g.
 `{"kind":"quadratic","a":[[1,0],[0,0]],"b":[1,0]}`.

 # Safety
 `id` and `def_json` must be nul-terminated strings; `out` must be writable.
 */
enum TfStatus tf_objective_from_json(const char *id,
                                     const char *def_json,
                                     struct TfObjective **out);

/*
 # Safety
 `obj` must come from a `tf_objective_*` constructor and not be freed twice.
 */
void tf_objective_free(struct TfObjective *obj);

/*
 Dimension of `obj`, or 0 for a null handle.

 # Safety
 `obj` must be null or a live handle.
 */
size_t tf_objective_dim(const struct TfObjective *obj);

/*
 `g(x)` into `value` and, when `grad` is not null, `∇g(x)` into `grad[0..n)`.

 # Safety
 `x` and `grad` (if not null) must point to `n` doubles; `value` must be writable.
 */
enum TfStatus tf_objective_eval(const struct TfObjective *obj,
                                const double *x,
                                size_t n,
                                double *value,
                                double *grad);

/*
 The minimal-norm minimizer `x*` into `out[0..n)`.

 # Safety
 `out` must point to `n` writable doubles.
 */
enum TfStatus tf_objective_minimizer(const struct TfObjective *obj, double *out, size_t n);

/*
 Minimizer of `g + (eps/2)|x|^2` into `out[0..n)`.

 # Safety
 `out` must point to `n` writable doubles.
 */
enum TfStatus tf_objective_tikhonov_point(const struct TfObjective *obj,
                                          double eps,
                                          double *out,
                                          size_t n);

/*
 Regime of the power schedule `a * t^-p` with damping exponent `q`.

 # Safety
 `out` must be writable.
 */
enum TfStatus tf_classify_regime(double p,
                                 double q,
                                 double a,
                                 double alpha,
                                 double gamma,
                                 enum TfRegime *out);

/*
 Integrates from `(x0, v0)` at `params.t0` to `t_end` with `eps = a * t^-p`,
 sampled at `sample_count` log-spaced times, default tolerances.

 # Safety
 `params` must be readable, `x0`/`v0` must point to `n` doubles, `out` writable.
 */
enum TfStatus tf_integrate(const struct TfObjective *obj,
                           const struct TfDynamicsParams *params,
                           double a,
                           double p,
                           const double *x0,
                           const double *v0,
                           size_t n,
                           double t_end,
                           size_t sample_count,
                           struct TfTrajectory **out);

/*
 # Safety
 `traj` must be null or a live handle.
 */
size_t tf_trajectory_len(const struct TfTrajectory *traj);

/*
 # Safety
 `traj` must be null or a live handle.
 */
size_t tf_trajectory_dim(const struct TfTrajectory *traj);

/*
 Sample `k`: time into `t`, position and velocity into `x[0..n)`, `v[0..n)`.

 # Safety
 `t` must be writable; `x` and `v` must point to `n` writable doubles.
 */
enum TfStatus tf_trajectory_sample(const struct TfTrajectory *traj,
                                   size_t k,
                                   double *t,
                                   double *x,
                                   double *v,
                                   size_t n);

/*
 # Safety
 `traj` must come from `tf_integrate` and not be freed twice.
 */
void tf_trajectory_free(struct TfTrajectory *traj);

/*
 One step of the discrete algorithm: `x_next` from `x_prev = x_{n-1}` and `x_curr = x_n`.

 # Safety
 `params` must be readable; the three arrays must hold `dim` doubles.
 */
enum TfStatus tf_discrete_step(const struct TfObjective *obj,
                               const struct TfDiscreteParams *params,
                               uint64_t n,
                               const double *x_prev,
                               const double *x_curr,
                               size_t dim,
                               double *x_next);

/*
 Runs the full pipeline on a run config (JSON, as accepted by
 `tikflow run --config`) against the built-in corpus, and returns the run
 summary as a JSON string to be released with [`tf_string_free`].
 Nothing is written to disk.

 # Safety
 `config_json` must be a nul-terminated string; `summary_out` must be writable.
 */
enum TfStatus tf_run_config_json(const char *config_json, char **summary_out);

/*
 # Safety
 `s` must come from this library and not be freed twice.
 */
void tf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TIKFLOW_H */
