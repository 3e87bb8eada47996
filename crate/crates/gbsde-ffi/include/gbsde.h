#ifndef GBSDE_H
#define GBSDE_H

/* Generated by cbindgen from the gbsde-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible entry point.
 */
typedef enum {
  GBSDE_STATUS_OK = 0,
  GBSDE_STATUS_INVALID_ARGUMENT = 1,
  GBSDE_STATUS_CONTRACT_VIOLATION = 2,
  GBSDE_STATUS_NUMERICAL_FAILURE = 3,
  GBSDE_STATUS_DEGENERATE_RATIO = 4,
  GBSDE_STATUS_NULL_POINTER = 5,
  GBSDE_STATUS_INTERNAL_ERROR = 6,
} GbsdeStatus;

/**
 * Builtin driver kinds for `gbsde_generator_builtin`.
 */
typedef enum {
  /**
   * g = 0; `param` ignored.
   */
  GBSDE_GENERATOR_KIND_ZERO = 0,
  /**
   * g = param * z_1.
   */
  GBSDE_GENERATOR_KIND_LINEAR_Z = 1,
  /**
   * g = param * t * z_1 (linear-in-time envelope).
   */
  GBSDE_GENERATOR_KIND_TIME_SCALED_LINEAR = 2,
  /**
   * g = sin(param * t) * z_1.
   */
  GBSDE_GENERATOR_KIND_TIME_SCALED_SIN = 3,
  /**
   * g = |z|^2; rejected by envelope-gated operations.
   */
  GBSDE_GENERATOR_KIND_QUADRATIC = 4,
} GbsdeGeneratorKind;

/**
 * Terminal kinds for `gbsde_solve_backward` and `gbsde_g_expect`.
 */
typedef enum {
  /**
   * xi = B_T (first coordinate); `param` ignored.
   */
  GBSDE_TERMINAL_KIND_BROWNIAN = 0,
  /**
   * xi = param.
   */
  GBSDE_TERMINAL_KIND_CONSTANT = 1,
  /**
   * xi = B_T + param.
   */
  GBSDE_TERMINAL_KIND_BROWNIAN_SHIFT = 2,
} GbsdeTerminalKind;

/**
 * Opaque Brownian path batch.
 */
typedef struct GbsdeBatch GbsdeBatch;

/**
 * Opaque driver specification.
 */
typedef struct GbsdeGenerator GbsdeGenerator;

/**
 * Opaque time grid.
 */
typedef struct GbsdeGrid GbsdeGrid;

/**
 * Opaque solution pair (Y, Z).
 */
typedef struct GbsdeSolution GbsdeSolution;

/**
 * Moment-comparison summary mirrored from the Rust report.
 */
typedef struct {
  double p;
  double lhs_mean;
  double lhs_std_error;
  double rhs_mean;
  double rhs_std_error;
  double ratio_upper;
  double ratio_lower;
  double ratio_upper_ci_lo;
  double ratio_upper_ci_hi;
} GbsdeRatioReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message into `buf` (truncated, always NUL-terminated
 * when `len > 0`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must point to at least `len` writable bytes, or be null.
 */
uintptr_t gbsde_last_error_message(char *buf, uintptr_t len);

/**
 * Uniform grid over `[0, horizon]` with `steps` intervals.
 *
 * # Safety
 * `out` must be a valid pointer to a `GbsdeGrid*` slot.
 */
GbsdeStatus gbsde_grid_uniform(double horizon, uintptr_t steps, GbsdeGrid **out);

/**
 * # Safety
 * `grid` must be null or a pointer previously returned by a grid
 * constructor and not yet freed.
 */
void gbsde_grid_free(GbsdeGrid *grid);

/**
 * Simulate `paths` x `steps` x `dims` Brownian increments; path `p` draws
 * from the counter-based stream `stream_offset + p` under `master_seed`.
 *
 * # Safety
 * `grid` must be a live grid handle; `out` a valid slot.
 */
GbsdeStatus gbsde_batch_simulate(const GbsdeGrid *grid,
                                 uintptr_t dims,
                                 uintptr_t paths,
                                 uint64_t master_seed,
                                 uint64_t stream_offset,
                                 GbsdeBatch **out);

/**
 * # Safety
 * `batch` must be null or a live batch handle.
 */
void gbsde_batch_free(GbsdeBatch *batch);

/**
 * Brownian levels of one path, row-major `[node][dim]`; `out_len` must be
 * `(steps + 1) * dims`.
 *
 * # Safety
 * `batch` must be a live handle; `out` must point to `out_len` doubles.
 */
GbsdeStatus gbsde_batch_path_values(const GbsdeBatch *batch,
                                    uintptr_t path,
                                    double *out,
                                    uintptr_t out_len);

/**
 * Construct a builtin driver. `param` feeds the kinds that take one.
 *
 * # Safety
 * `out` must be a valid slot.
 */
GbsdeStatus gbsde_generator_builtin(GbsdeGeneratorKind kind, double param, GbsdeGenerator **out);

/**
 * # Safety
 * `generator` must be null or a live generator handle.
 */
void gbsde_generator_free(GbsdeGenerator *generator);

/**
 * Backward solve with a polynomial basis of total degree `basis_degree`.
 *
 * # Safety
 * `batch` and `generator` must be live handles; `out` a valid slot.
 */
GbsdeStatus gbsde_solve_backward(const GbsdeBatch *batch,
                                 const GbsdeGenerator *generator,
                                 GbsdeTerminalKind terminal_kind,
                                 double terminal_param,
                                 uintptr_t basis_degree,
                                 uintptr_t picard_iters,
                                 GbsdeSolution **out);

/**
 * The exact family `Y = n B - n^2 t`, `Z = n` on a one-dimensional batch.
 *
 * # Safety
 * `batch` must be a live handle; `out` a valid slot.
 */
GbsdeStatus gbsde_quadratic_solution(double n, const GbsdeBatch *batch, GbsdeSolution **out);

/**
 * # Safety
 * `solution` must be null or a live solution handle.
 */
void gbsde_solution_free(GbsdeSolution *solution);

/**
 * # Safety
 * `solution` must be a live handle.
 */
uintptr_t gbsde_solution_paths(const GbsdeSolution *solution);

/**
 * # Safety
 * `solution` must be a live handle.
 */
uintptr_t gbsde_solution_nodes(const GbsdeSolution *solution);

/**
 * # Safety
 * `solution` must be a live handle.
 */
uintptr_t gbsde_solution_dims(const GbsdeSolution *solution);

/**
 * Copy `Y` of one path (length `nodes`).
 *
 * # Safety
 * `solution` must be a live handle; `out` must point to `out_len` doubles.
 */
GbsdeStatus gbsde_solution_y_path(const GbsdeSolution *solution,
                                  uintptr_t path,
                                  double *out,
                                  uintptr_t out_len);

/**
 * Copy `Z` of one path, row-major `[step][dim]` (length `steps * dims`).
 *
 * # Safety
 * `solution` must be a live handle; `out` must point to `out_len` doubles.
 */
GbsdeStatus gbsde_solution_z_path(const GbsdeSolution *solution,
                                  uintptr_t path,
                                  double *out,
                                  uintptr_t out_len);

/**
 * Expectation value and standard error for a terminal under a driver.
 *
 * # Safety
 * `batch` and `generator` must be live handles; `value` and `std_error`
 * must be valid slots.
 */
GbsdeStatus gbsde_g_expect(const GbsdeBatch *batch,
                           const GbsdeGenerator *generator,
                           GbsdeTerminalKind terminal_kind,
                           double terminal_param,
                           uintptr_t basis_degree,
                           uintptr_t picard_iters,
                           double *value,
                           double *std_error);

/**
 * Both moment-ratio orientations at exponent `p`.
 *
 * # Safety
 * `solution` must be a live handle; `out` a valid report slot.
 */
GbsdeStatus gbsde_bdg_ratio(const GbsdeSolution *solution,
                            double p,
                            bool allow_nonzero_start,
                            GbsdeRatioReport *out);

/**
 * Max one-step defect of a solution against a driver, over all paths.
 *
 * # Safety
 * All handles must be live; `out_max` a valid slot.
 */
GbsdeStatus gbsde_solution_residual_max(const GbsdeSolution *solution,
                                        const GbsdeBatch *batch,
                                        const GbsdeGenerator *generator,
                                        double *out_max);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GBSDE_H */
