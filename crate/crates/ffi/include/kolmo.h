#ifndef KOLMO_H
#define KOLMO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KolmoStatus {
  KOLMO_STATUS_OK = 0,
  KOLMO_STATUS_NULL_POINTER = 1,
  KOLMO_STATUS_INVALID_UTF8 = 2,
  KOLMO_STATUS_INVALID_ARGUMENT = 3,
  KOLMO_STATUS_PARSE_ERROR = 4,
  KOLMO_STATUS_COMPUTATION_FAILED = 5,
  KOLMO_STATUS_PANIC = 6,
} KolmoStatus;

typedef enum KolmoMode {
  KOLMO_MODE_BASIC = 0,
  KOLMO_MODE_EQUALIZED = 1,
} KolmoMode;

// Exact truncated power series with rational coefficients.
typedef struct KolmoSeries KolmoSeries;

typedef struct KolmoCertParams {
  double t0;
  double lambda;
  double mu;
  double r;
  double beta;
  uint32_t n;
} KolmoCertParams;

typedef struct KolmoCertificate {
  bool passes;
  bool condition_i;
  bool condition_ii;
  bool condition_iii;
  double c;
  double big_r;
  double t_inf;
} KolmoCertificate;

typedef struct KolmoOptimum {
  double lambda;
  double mu;
  double r;
  double e_t_inf;
  double t_inf;
  double gradient_norm;
} KolmoOptimum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null.
//
// The pointer stays valid until the next call into this library on the same thread.
const char *kolmo_last_error(void);

// Library version as a static string.
const char *kolmo_version(void);

// # Safety
// `text` must be null or a string returned by this library that has not been freed.
void kolmo_string_free(char *text);

// Parses `{"trunc_order": N, "coeffs": ["p/q", ...]}`.
//
// # Safety
// `json` must be a valid NUL-terminated string and `out` a valid pointer.
enum KolmoStatus kolmo_series_from_json(const char *json, struct KolmoSeries **out);

// # Safety
// `series` must be a live handle and `out` a valid pointer.
enum KolmoStatus kolmo_series_to_json(const struct KolmoSeries *series, char **out);

// Coefficient of `z^index` as `"p/q"`.
//
// # Safety
// `series` must be a live handle and `out` a valid pointer.
enum KolmoStatus kolmo_series_coeff(const struct KolmoSeries *series, size_t index, char **out);

// # Safety
// `series` must be a live handle and `out` a valid pointer.
enum KolmoStatus kolmo_series_trunc_order(const struct KolmoSeries *series, ptrdiff_t *out);

// `outer ∘ inner`; `inner` must vanish at 0.
//
// # Safety
// Both handles must be live and `out` a valid pointer.
enum KolmoStatus kolmo_series_compose(const struct KolmoSeries *outer,
                                      const struct KolmoSeries *inner,
                                      struct KolmoSeries **out);

// Compositional inverse of a series `a_1 z + ...` with `a_1 != 0`.
//
// # Safety
// `series` must be a live handle and `out` a valid pointer.
enum KolmoStatus kolmo_series_invert(const struct KolmoSeries *series, struct KolmoSeries **out);

// Normalizing map of `z^2/2 + β z^n` after `steps` rounds, known to `z^trunc`.
//
// # Safety
// `beta` must be a valid NUL-terminated string such as `"1/2"` and `out` a valid pointer.
enum KolmoStatus kolmo_normalizer(size_t n,
                                  const char *beta,
                                  size_t steps,
                                  size_t trunc,
                                  struct KolmoSeries **out);

// # Safety
// `series` must be null or a handle from this library that has not been freed.
void kolmo_series_free(struct KolmoSeries *series);

// Evaluates the certificate conditions; a failing certificate is still `KOLMO_STATUS_OK`.
//
// # Safety
// `out` must be a valid pointer.
enum KolmoStatus kolmo_certify(struct KolmoCertParams params, struct KolmoCertificate *out);

// # Safety
// `out` must be a valid pointer.
enum KolmoStatus kolmo_threshold_t0(double lambda,
                                    double mu,
                                    double r,
                                    double beta,
                                    uint32_t n,
                                    double *out);

// # Safety
// `out` must be a valid pointer.
enum KolmoStatus kolmo_optimize(enum KolmoMode mode, struct KolmoOptimum *out);

// # Safety
// `out` must be a valid pointer.
enum KolmoStatus kolmo_true_radius(uint32_t n, double beta, double *out);

// # Safety
// `out` must be a valid pointer.
enum KolmoStatus kolmo_q_value(uint32_t n, double lambda, double mu, double *out);

// Runs a command-line invocation in process, e.g. `{"certify", "--t0", "0.004"}`
// (without the program name). Both output strings are always set on success
// and must be freed; `exit_code` follows the command-line convention.
//
// # Safety
// `argv` must point to `argc` valid NUL-terminated strings; the out-pointers must be valid.
enum KolmoStatus kolmo_run(const char *const *argv,
                           size_t argc,
                           int *exit_code,
                           char **stdout_text,
                           char **stderr_text);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KOLMO_H */
