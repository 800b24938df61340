#include <math.h>
#include <stdio.h>
#include "gmnorm.h"

#define CHECK(c)                                              \
  do {                                                        \
    if (!(c)) {                                               \
      fprintf(stderr, "check failed at line %d\n", __LINE__); \
      return 1;                                               \
    }                                                         \
  } while (0)

int main(void) {
  /* min 1/2 ||x - (1, -2)||^2 + 0.5 ||x||_1 has solution (0.5, -1.5) */
  const double a[4] = {1.0, 0.0, 0.0, 1.0};
  const double b[2] = {1.0, -2.0};
  GmProblem *p = NULL;
  CHECK(gm_problem_least_squares(a, 2, 2, b, GM_REGULARIZER_L1, 0.5, NULL, &p) == GM_STATUS_OK);
  CHECK(gm_problem_dim(p) == 2);

  GmRun *r = NULL;
  CHECK(gm_run_meta(p, NULL, 0, 1.0, 1e-12, 1000, &r) == GM_STATUS_OK);
  double x[2];
  CHECK(gm_run_solution(r, x, 2) == GM_STATUS_OK);
  CHECK(fabs(x[0] - 0.5) < 1e-9 && fabs(x[1] + 1.5) < 1e-9);
  CHECK(gm_run_solution(r, x, 1) == GM_STATUS_BUFFER_TOO_SMALL);
  char msg[128];
  CHECK(gm_last_error_message(msg, sizeof msg) > 0);
  gm_run_free(r);

  GmRun *o = NULL;
  CHECK(gm_run_ocgmg(p, NULL, 0, 1.0, 8, GM_FORM_TWO_AUX, &o) == GM_STATUS_OK);
  int passed = 0;
  size_t checks = 0;
  CHECK(gm_run_certify(o, &passed, &checks) == GM_STATUS_OK);
  CHECK(passed == 1 && checks > 0);
  CHECK(gm_run_oracle_calls(o) == 8);
  gm_run_free(o);

  CHECK(gm_run_ocgmg(NULL, NULL, 0, 1.0, 8, GM_FORM_CANONICAL, &o) == GM_STATUS_NULL_POINTER);
  gm_problem_free(p);
  puts("ok");
  return 0;
}
