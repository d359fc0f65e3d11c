#ifndef ENTREG_H
#define ENTREG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EntregStatus {
  ENTREG_STATUS_OK = 0,
  ENTREG_STATUS_NULL_POINTER = 1,
  ENTREG_STATUS_INVALID_ARGUMENT = 2,
  ENTREG_STATUS_DIMENSION_MISMATCH = 3,
  ENTREG_STATUS_NUMERICAL = 4,
  ENTREG_STATUS_BUFFER_TOO_SMALL = 5,
  ENTREG_STATUS_PANIC = 6,
} EntregStatus;

typedef enum EntregSolver {
  ENTREG_SOLVER_LS = 0,
  ENTREG_SOLVER_OLS = 1,
  ENTREG_SOLVER_LASSO = 2,
  ENTREG_SOLVER_CS = 3,
  ENTREG_SOLVER_SINDY = 4,
  ENTREG_SOLVER_TW = 5,
  ENTREG_SOLVER_ER = 6,
} EntregSolver;

/**
 * Candidate-function matrix Φ.
 */
typedef struct EntregBasis EntregBasis;

/**
 * Solver output.
 */
typedef struct EntregSolution EntregSolution;

/**
 * Options for [`entreg_er_solve`]; start from [`entreg_er_options_default`].
 */
typedef struct EntregErOptions {
  size_t knn_k;
  /**
   * Nonzero selects a fresh tolerance per forward step.
   */
  uint8_t dynamic_tolerance;
  double alpha;
  size_t n_shuffles;
  /**
   * Zero means `min(K, rows / 2)`.
   */
  size_t max_forward_terms;
  uint64_t seed;
} EntregErOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message on this thread into `buf` (NUL-terminated,
 * truncated to `cap`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes.
 */
size_t entreg_last_error_message(char *buf, size_t cap);

/**
 * Library version as a static NUL-terminated string.
 */
const char *entreg_version(void);

/**
 * Evaluates every monomial of degree ≤ `degree` on `n_rows` states of
 * dimension `state_dim` (row-major).
 *
 * # Safety
 * `states` must hold `n_rows * state_dim` doubles; `out` must be writable.
 */
enum EntregStatus entreg_basis_from_states(const double *states,
                                           size_t n_rows,
                                           size_t state_dim,
                                           uint32_t degree,
                                           struct EntregBasis **out);

/**
 * Wraps an explicit `n_rows × n_cols` matrix (row-major).
 *
 * # Safety
 * `values` must hold `n_rows * n_cols` doubles; `out` must be writable.
 */
enum EntregStatus entreg_basis_from_matrix(const double *values,
                                           size_t n_rows,
                                           size_t n_cols,
                                           struct EntregBasis **out);

/**
 * # Safety
 * `basis` must be null or a live handle.
 */
size_t entreg_basis_n_rows(const struct EntregBasis *basis);

/**
 * # Safety
 * `basis` must be null or a live handle.
 */
size_t entreg_basis_n_cols(const struct EntregBasis *basis);

/**
 * # Safety
 * `basis` must be null or a handle not yet freed.
 */
void entreg_basis_free(struct EntregBasis *basis);

/**
 * Solves `Φa ≈ f` with a baseline solver or ER at its defaults.
 *
 * `param` is the solver's main hyperparameter (OLS threshold, Lasso λ, CS
 * ε, SINDy/TW λ); pass NaN for the default, which is cross-validation for
 * OLS, Lasso and CS. LS and ER ignore it. `seed` feeds ER's shuffle tests.
 *
 * # Safety
 * `basis` must be a live handle, `f` must hold `len` doubles and `out` must
 * be writable.
 */
enum EntregStatus entreg_solve(const struct EntregBasis *basis,
                               const double *f,
                               size_t len,
                               enum EntregSolver solver,
                               double param,
                               uint64_t seed,
                               struct EntregSolution **out);

struct EntregErOptions entreg_er_options_default(void);

/**
 * Entropic Regression with explicit options (defaults when `options` is
 * null).
 *
 * # Safety
 * As [`entreg_solve`]; `options` must be null or point to a valid struct.
 */
enum EntregStatus entreg_er_solve(const struct EntregBasis *basis,
                                  const double *f,
                                  size_t len,
                                  const struct EntregErOptions *options,
                                  struct EntregSolution **out);

/**
 * Number of coefficients (columns of Φ).
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
size_t entreg_solution_len(const struct EntregSolution *sol);

/**
 * Number of nonzero coefficients.
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
size_t entreg_solution_support_len(const struct EntregSolution *sol);

/**
 * `‖Φa − f‖₂`, or NaN for a null handle.
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
double entreg_solution_residual_norm(const struct EntregSolution *sol);

/**
 * 1 when the solver converged, 0 otherwise (or for a null handle).
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
uint8_t entreg_solution_converged(const struct EntregSolution *sol);

/**
 * Copies all coefficients into `out` (capacity `cap`).
 *
 * # Safety
 * `sol` must be a live handle and `out` valid for `cap` doubles.
 */
enum EntregStatus entreg_solution_coefficients(const struct EntregSolution *sol,
                                               double *out,
                                               size_t cap);

/**
 * Copies the support indices (ascending) into `out` (capacity `cap`).
 *
 * # Safety
 * `sol` must be a live handle and `out` valid for `cap` elements.
 */
enum EntregStatus entreg_solution_support(const struct EntregSolution *sol,
                                          size_t *out,
                                          size_t cap);

/**
 * # Safety
 * `sol` must be null or a handle not yet freed.
 */
void entreg_solution_free(struct EntregSolution *sol);

/**
 * KSG estimate of `I(X;Y)` in nats for scalar samples.
 *
 * # Safety
 * `x` and `y` must hold `n` doubles; `out` must be writable.
 */
enum EntregStatus entreg_estimate_mi(const double *x,
                                     const double *y,
                                     size_t n,
                                     size_t k,
                                     double *out);

/**
 * KSG estimate of `I(X;Y|Z)` in nats for scalar samples; a null `z`
 * gives `I(X;Y)`.
 *
 * # Safety
 * `x`, `y` and (if non-null) `z` must hold `n` doubles; `out` must be
 * writable.
 */
enum EntregStatus entreg_estimate_cmi(const double *x,
                                      const double *y,
                                      const double *z,
                                      size_t n,
                                      size_t k,
                                      double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ENTREG_H */
