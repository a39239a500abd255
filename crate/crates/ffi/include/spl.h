#ifndef SPL_H
#define SPL_H

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Aggregate certificate outcome of a completed run.
typedef enum SplCertificate {
  SPL_CERTIFICATE_PASS = 0,
  SPL_CERTIFICATE_WARN = 1,
  SPL_CERTIFICATE_FAIL = 2,
} SplCertificate;

// Return codes. 0 to 3 coincide with the `spl` exit codes.
typedef enum SplStatus {
  SPL_STATUS_OK = 0,
  SPL_STATUS_SOLVER_FAILURE = 1,
  SPL_STATUS_CONFIG_ERROR = 2,
  SPL_STATUS_CERTIFICATE_FAILURE = 3,
  SPL_STATUS_NULL_POINTER = 4,
  SPL_STATUS_INVALID_UTF8 = 5,
  SPL_STATUS_BUFFER_TOO_SMALL = 6,
  SPL_STATUS_PANIC = 7,
  SPL_STATUS_UNKNOWN_NAME = 8,
} SplStatus;

// Parsed and validated run configuration.
typedef struct SplConfig SplConfig;

// Outcome of [`spl_run`].
typedef struct SplResult SplResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Last error message on this thread, or null. Valid until the next call
// into this library from the same thread.
const char *spl_last_error(void);

// Library version as a static NUL-terminated string.
const char *spl_version(void);

// Parses a TOML config file. Relative table paths resolve against its
// directory.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum SplStatus spl_config_from_file(const char *path, struct SplConfig **out);

// Parses TOML text. `base_dir` may be null (current directory).
//
// # Safety
// `text` and `base_dir` (if non-null) must be NUL-terminated strings and
// `out` a valid pointer.
enum SplStatus spl_config_from_toml(const char *text, const char *base_dir, struct SplConfig **out);

// Redirects the outputs of a config.
//
// # Safety
// `cfg` must come from a config constructor; `dir` must be NUL-terminated.
enum SplStatus spl_config_set_output(struct SplConfig *cfg, const char *dir);

// Overrides the random seed.
//
// # Safety
// `cfg` must come from a config constructor.
enum SplStatus spl_config_set_seed(struct SplConfig *cfg, uint64_t seed);

// # Safety
// `cfg` must be null or come from a config constructor, and not be freed twice.
void spl_config_free(struct SplConfig *cfg);

// Runs the configured case and writes its outputs. On `Ok` or
// `CertificateFailure` `*out` receives a result handle; otherwise it is
// left null.
//
// # Safety
// `cfg` must come from a config constructor and `out` be a valid pointer.
enum SplStatus spl_run(const struct SplConfig *cfg, struct SplResult **out);

// Aggregate certificate status; `Fail` for a null handle.
//
// # Safety
// `res` must be null or come from [`spl_run`].
enum SplCertificate spl_result_status(const struct SplResult *res);

// Status of one named certificate; `UnknownName` if there is none.
//
// # Safety
// `res` must come from [`spl_run`]; `name` must be NUL-terminated; `out`
// must be a valid pointer.
enum SplStatus spl_result_certificate(const struct SplResult *res,
                                      const char *name,
                                      enum SplCertificate *out);

// JSON report, owned by the handle.
//
// # Safety
// `res` must be null or come from [`spl_run`].
const char *spl_result_report_json(const struct SplResult *res);

// # Safety
// `res` must be null or come from [`spl_run`], and not be freed twice.
void spl_result_free(struct SplResult *res);

// First eigenpair of the p-Laplacian on (a, b) with unit weight. Writes
// λ₁ to `lambda1`; if `values` is non-null, the sup-normalized nodal
// eigenfunction (`elements + 1` values) is copied there, provided
// `len >= elements + 1`.
//
// # Safety
// `lambda1` must be valid; `values` must be null or point to `len` doubles.
enum SplStatus spl_eigen_interval(double a,
                                  double b,
                                  size_t elements,
                                  double p,
                                  double *lambda1,
                                  double *values,
                                  size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPL_H */
