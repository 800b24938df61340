#ifndef GMNORM_H
#define GMNORM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GmStatus {
  GM_STATUS_OK = 0,
  GM_STATUS_NULL_POINTER = 1,
  GM_STATUS_INVALID_ARGUMENT = 2,
  GM_STATUS_DIMENSION_MISMATCH = 3,
  GM_STATUS_LINE_SEARCH = 4,
  GM_STATUS_NON_FINITE = 5,
  GM_STATUS_UNSUPPORTED = 6,
  GM_STATUS_BUFFER_TOO_SMALL = 7,
  GM_STATUS_PANIC = 8,
  GM_STATUS_INTERNAL = 9,
} GmStatus;

typedef enum GmRegularizer {
  GM_REGULARIZER_NONE = 0,
  GM_REGULARIZER_L1 = 1,
  GM_REGULARIZER_NON_NEGATIVE = 2,
} GmRegularizer;

typedef enum GmForm {
  GM_FORM_CANONICAL = 0,
  GM_FORM_EXTRAPOLATED = 1,
  GM_FORM_ONE_AUX = 2,
  GM_FORM_TWO_AUX = 3,
} GmForm;

typedef enum GmVerdict {
  GM_VERDICT_COMPLETED = 0,
  GM_VERDICT_CONVERGED = 1,
  GM_VERDICT_BUDGET_EXHAUSTED = 2,
  GM_VERDICT_ITERATION_CAP = 3,
  GM_VERDICT_LINE_SEARCH_FAILURE = 4,
  GM_VERDICT_NON_FINITE = 5,
  GM_VERDICT_RUNNING = 6,
} GmVerdict;

/*
 Opaque problem handle.
 */
typedef struct GmProblem GmProblem;

/*
 Opaque run handle.
 */
typedef struct GmRun GmRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copy of the message of the last failed call on this thread, NUL
 terminated and truncated to `len - 1` bytes. Returns the full length in
 bytes, excluding the terminator.

 # Safety
 `buf` must be null or valid for `len` bytes.
 */
size_t gm_last_error_message(char *buf, size_t len);

/*
 `f(x) = 1/2 ||Ax - b||^2` plus the chosen regularizer, with `A` given
 row-major. The Lipschitz constant is computed by power iteration.

 # Safety
 `a` must hold `m * n` values, `b` and `x0` must hold `m` and `n` values;
 `x0` may be null for the zero start. `out` must be a valid pointer.
 */
enum GmStatus gm_problem_least_squares(const double *a,
                                       size_t m,
                                       size_t n,
                                       const double *b,
                                       enum GmRegularizer reg,
                                       double lambda,
                                       const double *x0,
                                       struct GmProblem **out);

/*
 Seeded random LASSO instance with Gaussian data and start.

 # Safety
 `out` must be a valid pointer.
 */
enum GmStatus gm_problem_random_lasso(size_t m,
                                      size_t n,
                                      double lambda,
                                      uint64_t seed,
                                      struct GmProblem **out);

/*
 Seeded random strongly convex quadratic with spectrum in `[mu, l]`.

 # Safety
 `out` must be a valid pointer.
 */
enum GmStatus gm_problem_random_quadratic(size_t n,
                                          double mu,
                                          double l,
                                          uint64_t seed,
                                          struct GmProblem **out);

/*
 # Safety
 `p` must be null or a handle from a `gm_problem_*` constructor that has
 not been freed.
 */
void gm_problem_free(struct GmProblem *p);

/*
 Dimension of the problem, 0 for a null handle.

 # Safety
 `p` must be null or a live problem handle.
 */
size_t gm_problem_dim(const struct GmProblem *p);

/*
 # Safety
 `p` must be a live problem handle and `out` a valid pointer.
 */
enum GmStatus gm_problem_lipschitz(const struct GmProblem *p, double *out);

/*
 Copy the default start point into `buf`.

 # Safety
 `p` must be a live problem handle and `buf` valid for `len` values.
 */
enum GmStatus gm_problem_start(const struct GmProblem *p, double *buf, size_t len);

/*
 OGM-G with `T` oracle calls and fixed `L`. A failed descent test is not
 an error: it shows up as `GM_VERDICT_LINE_SEARCH_FAILURE`.

 # Safety
 `p` must be a live problem handle; `x0` null (default start) or valid for
 `len` values; `out` a valid pointer.
 */
enum GmStatus gm_run_ogmg(const struct GmProblem *p,
                          const double *x0,
                          size_t len,
                          double l,
                          size_t t,
                          enum GmForm f,
                          struct GmRun **out);

/*
 OCGM-G with `T` oracle calls and fixed `L`.

 # Safety
 As for [`gm_run_ogmg`].
 */
enum GmStatus gm_run_ocgmg(const struct GmProblem *p,
                           const double *x0,
                           size_t len,
                           double l,
                           size_t t,
                           enum GmForm f,
                           struct GmRun **out);

/*
 ACGM with backtracking from `L0`. `eps <= 0` disables the tolerance stop.

 # Safety
 As for [`gm_run_ogmg`].
 */
enum GmStatus gm_run_acgm(const struct GmProblem *p,
                          const double *x0,
                          size_t len,
                          double l0,
                          double eps,
                          size_t budget,
                          struct GmRun **out);

/*
 The parameter-free ACGM + OCGM-G meta-scheme. `eps <= 0` disables the
 tolerance stop; the solution is the last certified point.

 # Safety
 As for [`gm_run_ogmg`].
 */
enum GmStatus gm_run_meta(const struct GmProblem *p,
                          const double *x0,
                          size_t len,
                          double l0,
                          double eps,
                          size_t budget,
                          struct GmRun **out);

/*
 # Safety
 `r` must be null or a live run handle.
 */
void gm_run_free(struct GmRun *r);

/*
 # Safety
 `r` must be null or a live run handle.
 */
size_t gm_run_oracle_calls(const struct GmRun *r);

/*
 # Safety
 `r` must be null or a live run handle.
 */
size_t gm_run_failures(const struct GmRun *r);

/*
 # Safety
 `r` must be a live run handle and `out` a valid pointer.
 */
enum GmStatus gm_run_verdict(const struct GmRun *r, enum GmVerdict *out);

/*
 Dual norm of the last recorded gradient mapping.

 # Safety
 `r` must be a live run handle and `out` a valid pointer.
 */
enum GmStatus gm_run_last_gmap(const struct GmRun *r, double *out);

/*
 Copy the returned point into `buf`.

 # Safety
 `r` must be a live run handle and `buf` valid for `len` values.
 */
enum GmStatus gm_run_solution(const struct GmRun *r, double *buf, size_t len);

/*
 Evaluate the runtime certificates of a fixed-length run (OGM-G or
 OCGM-G). `passed` receives 1 when every asserted check holds, `checks`
 the number of checks evaluated. Adaptive runs give `GM_UNSUPPORTED`.

 # Safety
 `r` must be a live run handle; `passed` and `checks` valid pointers.
 */
enum GmStatus gm_run_certify(const struct GmRun *r, int32_t *passed, size_t *checks);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GMNORM_H */
