#ifndef HODOGRAPH_H
#define HODOGRAPH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Bumped whenever a signature or struct layout changes.
 */
#define HG_ABI_VERSION 1

typedef enum HgStatus {
  HG_STATUS_OK = 0,
  HG_STATUS_NULL_POINTER = 1,
  HG_STATUS_INVALID_UTF8 = 2,
  /**
   * The problem text or demo name could not be turned into a problem.
   */
  HG_STATUS_SETUP = 3,
  /**
   * A length argument does not match the problem dimension.
   */
  HG_STATUS_DIMENSION = 4,
  /**
   * The output buffer is too small; the required length was written.
   */
  HG_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * The operation needs the other half of the model (hodograph vs initial data).
   */
  HG_STATUS_WRONG_MODEL = 6,
  HG_STATUS_NO_BRANCH = 7,
  HG_STATUS_NO_CONVERGENCE = 8,
  /**
   * Any other numerical failure.
   */
  HG_STATUS_NUMERICAL = 9,
  HG_STATUS_PANIC = 10,
} HgStatus;

/**
 * Opaque problem handle.
 */
typedef struct HgProblem HgProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

uint32_t hg_abi_version(void);

/**
 * Copies the last error message (NUL-terminated, truncated to `cap`) and
 * returns its full length in bytes excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t hg_last_error(char *buf, size_t cap);

/**
 * Parses a TOML problem definition.
 *
 * # Safety
 * `src` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HgStatus hg_problem_from_toml(const char *src, struct HgProblem **out);

/**
 * Loads a built-in demo; `initial_data` nonzero selects its initial-data side.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HgStatus hg_problem_from_demo(const char *name, int32_t initial_data, struct HgProblem **out);

/**
 * # Safety
 * `p` must be null or a handle from this library not yet freed.
 */
void hg_problem_free(struct HgProblem *p);

/**
 * # Safety
 * `p` must be a live handle and `out` a valid pointer.
 */
enum HgStatus hg_problem_dim(const struct HgProblem *p, size_t *out);

/**
 * `M = J_f(u) + tI` into `out` (n·n values, row-major).
 *
 * # Safety
 * `u` holds `n` values and `out` has room for `n*n`.
 */
enum HgStatus hg_build_m(const struct HgProblem *p,
                         const double *u,
                         size_t n,
                         double t,
                         double *out);

/**
 * Coefficients `a_0 … a_{n-1}` of the monic blow-up polynomial at `u`.
 *
 * # Safety
 * `u` holds `n` values and `out` has room for `n`.
 */
enum HgStatus hg_charpoly(const struct HgProblem *p, const double *u, size_t n, double *out);

/**
 * Sorted real branch values at `u`; `count` receives how many exist.
 *
 * # Safety
 * `u` holds `n` values, `out` has room for `cap`, `count` is valid.
 */
enum HgStatus hg_real_branches(const struct HgProblem *p,
                               const double *u,
                               size_t n,
                               double *out,
                               size_t cap,
                               size_t *count);

/**
 * Solves `x = u t + f(u)` for `u` by Newton iteration from `guess`.
 *
 * # Safety
 * `x`, `guess` and `u_out` each hold `n` values.
 */
enum HgStatus hg_solve_u(const struct HgProblem *p,
                         const double *x,
                         size_t n,
                         double t,
                         const double *guess,
                         double *u_out);

/**
 * Earliest positive (`positive` nonzero) or latest negative blow-up time.
 *
 * # Safety
 * `t_c` holds one value; `u_c` and `x_c` hold `n` values each.
 */
enum HgStatus hg_catastrophe_search(const struct HgProblem *p,
                                    int32_t positive,
                                    size_t starts,
                                    uint64_t seed,
                                    double *t_c,
                                    double *u_c,
                                    double *x_c);

/**
 * Eigentimes at the Lagrangian label `x0`, sorted ascending.
 *
 * # Safety
 * `x0` holds `n` values, `out` has room for `cap`, `count` is valid.
 */
enum HgStatus hg_eigentimes(const struct HgProblem *p,
                            const double *x0,
                            size_t n,
                            double *out,
                            size_t cap,
                            size_t *count);

/**
 * Gradient catastrophe found directly from the initial data.
 *
 * # Safety
 * `t_c` holds one value; `u_c` and `x_c` hold `n` values each.
 */
enum HgStatus hg_direct_catastrophe(const struct HgProblem *p,
                                    size_t starts,
                                    uint64_t seed,
                                    double *t_c,
                                    double *u_c,
                                    double *x_c);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HODOGRAPH_H */
