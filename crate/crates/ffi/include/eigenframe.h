#ifndef EIGENFRAME_H
#define EIGENFRAME_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; the first six match the command-line exit codes.
 */
typedef enum EfStatus {
  EF_STATUS_OK = 0,
  EF_STATUS_CONFIG = 1,
  EF_STATUS_UNCLASSIFIED = 2,
  EF_STATUS_NON_CONSTANT_RANK = 3,
  EF_STATUS_TRIVIAL_ONLY = 4,
  EF_STATUS_INTEGRATION = 5,
  EF_STATUS_NULL_ARGUMENT = 6,
  EF_STATUS_INVALID_UTF8 = 7,
  EF_STATUS_BUFFER_TOO_SMALL = 8,
  EF_STATUS_PANIC = 9,
} EfStatus;

/**
 * Classification of a job's frame.
 */
typedef struct EfAnalysis EfAnalysis;

/**
 * A parsed and validated job file.
 */
typedef struct EfJob EfJob;

/**
 * Eigenvalues and flux on the job's grid, with residuals.
 */
typedef struct EfSolution EfSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call into the library on the same thread.
 */
const char *ef_last_error(void);

/**
 * Library version as a static string.
 */
const char *ef_version(void);

/**
 * Parses a job from TOML text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EfStatus ef_job_from_toml(const char *text, struct EfJob **out);

/**
 * Reads a job file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EfStatus ef_job_from_file(const char *path, struct EfJob **out);

/**
 * Overrides one tolerance, e.g. `("curl_tol", "1e-4")` or `("seed", "7")`.
 *
 * # Safety
 * `job` must come from `ef_job_from_*`; `key` and `value` must be
 * NUL-terminated strings.
 */
enum EfStatus ef_job_set_tolerance(struct EfJob *job, const char *key, const char *value);

/**
 * The job's effective configuration as TOML.
 *
 * # Safety
 * `job` must come from `ef_job_from_*` and `out` be a valid pointer. The
 * string is released with `ef_string_free`.
 */
enum EfStatus ef_job_config_toml(const struct EfJob *job, char **out);

/**
 * # Safety
 * `job` must come from `ef_job_from_*` or be null.
 */
void ef_job_free(struct EfJob *job);

/**
 * Classifies the job's frame. When the frame is unclassified or its rank
 * varies, the analysis is still returned alongside the matching status.
 *
 * # Safety
 * `job` must come from `ef_job_from_*` and `out` be a valid pointer.
 */
enum EfStatus ef_analyze(const struct EfJob *job, struct EfAnalysis **out);

/**
 * Rank of the constraint matrix, or `SIZE_MAX` for a null handle.
 *
 * # Safety
 * `a` must come from `ef_analyze` or be null.
 */
size_t ef_analysis_rank(const struct EfAnalysis *a);

/**
 * Copies the case label (e.g. `N3-IIa`) into `buf` including the NUL;
 * `needed` receives the required size.
 *
 * # Safety
 * `a` must come from `ef_analyze`; `buf` must hold `len` bytes or be null
 * with `len` 0; `needed` may be null.
 */
enum EfStatus ef_analysis_case(const struct EfAnalysis *a, char *buf, size_t len, size_t *needed);

/**
 * Full classification report as JSON.
 *
 * # Safety
 * `job` and `a` must be live handles, `a` produced from `job`; `out` must
 * be a valid pointer. The string is released with `ef_string_free`.
 */
enum EfStatus ef_analysis_json(const struct EfJob *job, const struct EfAnalysis *a, char **out);

/**
 * # Safety
 * `a` must come from `ef_analyze` or be null.
 */
void ef_analysis_free(struct EfAnalysis *a);

/**
 * Integrates the eigenvalues from the job's `[initial]` data, reconstructs
 * the flux and computes residuals.
 *
 * # Safety
 * `job` and `a` must be live handles, `a` produced from `job`; `out` must
 * be a valid pointer.
 */
enum EfStatus ef_solve(const struct EfJob *job,
                       const struct EfAnalysis *a,
                       struct EfSolution **out);

/**
 * Number of grid nodes, or 0 for a null handle.
 *
 * # Safety
 * `s` must come from `ef_solve` or be null.
 */
size_t ef_solution_nodes(const struct EfSolution *s);

/**
 * Number of state variables, or 0 for a null handle.
 *
 * # Safety
 * `s` must come from `ef_solve` or be null.
 */
size_t ef_solution_dim(const struct EfSolution *s);

/**
 * Node coordinates, `nodes × dim` row-major in grid storage order.
 *
 * # Safety
 * `s` must come from `ef_solve`; `out` must hold `len` doubles.
 */
enum EfStatus ef_solution_points(const struct EfSolution *s, double *out, size_t len);

/**
 * Eigenvalues, `nodes × dim` row-major.
 *
 * # Safety
 * `s` must come from `ef_solve`; `out` must hold `len` doubles.
 */
enum EfStatus ef_solution_lambdas(const struct EfSolution *s, double *out, size_t len);

/**
 * Flux components, `nodes × dim` row-major.
 *
 * # Safety
 * `s` must come from `ef_solve`; `out` must hold `len` doubles.
 */
enum EfStatus ef_solution_flux(const struct EfSolution *s, double *out, size_t len);

/**
 * Curl and eigenvector residuals of the reconstructed flux.
 *
 * # Safety
 * `s` must come from `ef_solve`; `curl` and `eigen` must be valid pointers.
 */
enum EfStatus ef_solution_residuals(const struct EfSolution *s, double *curl, double *eigen);

/**
 * The machine-readable solve report as JSON.
 *
 * # Safety
 * `s` must come from `ef_solve` and `out` be a valid pointer. The string
 * is released with `ef_string_free`.
 */
enum EfStatus ef_solution_json(const struct EfSolution *s, char **out);

/**
 * # Safety
 * `s` must come from `ef_solve` or be null.
 */
void ef_solution_free(struct EfSolution *s);

/**
 * # Safety
 * `s` must be a string returned by this library or null.
 */
void ef_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EIGENFRAME_H */
