#ifndef SUMSET_H
#define SUMSET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SumsetStatus {
  SUMSET_STATUS_OK = 0,
  SUMSET_STATUS_NULL_POINTER = 1,
  SUMSET_STATUS_INVALID_PROBABILITY = 2,
  SUMSET_STATUS_OUT_OF_RANGE = 3,
  SUMSET_STATUS_INVALID_ARGUMENT = 4,
  SUMSET_STATUS_UNSUPPORTED = 5,
  SUMSET_STATUS_IO = 6,
  SUMSET_STATUS_TABLE = 7,
  SUMSET_STATUS_CHECKPOINT = 8,
  SUMSET_STATUS_INTERNAL = 9,
} SumsetStatus;

// A simulated histogram of missing-sum counts.
typedef struct SumsetDistribution SumsetDistribution;

// A fringe table.
typedef struct SumsetFringeTable SumsetFringeTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread; valid until the next call
// that fails. Empty when nothing has failed.
const char *sumset_last_error(void);

// P(i not in A+A).
//
// # Safety
// `out` must be null or valid for writes.
enum SumsetStatus sumset_miss_single(size_t n, size_t i, double p, double *out);

// P(i and j not in A+A).
//
// # Safety
// `out` must be null or valid for writes.
enum SumsetStatus sumset_miss_pair(size_t n, size_t i, size_t j, double p, double *out);

// E|A+A|.
//
// # Safety
// `out` must be null or valid for writes.
enum SumsetStatus sumset_expected_size(size_t n, double p, double *out);

// E[2n-1-|A+A|].
//
// # Safety
// `out` must be null or valid for writes.
enum SumsetStatus sumset_expected_missing(size_t n, double p, double *out);

// Var|A+A|.
//
// # Safety
// `out` must be null or valid for writes.
enum SumsetStatus sumset_variance(size_t n, double p, double *out);

// P(k not in A+B).
//
// # Safety
// `out` must be null or valid for writes.
enum SumsetStatus sumset_correlated_miss_single(size_t n,
                                                size_t k,
                                                double p,
                                                double p1,
                                                double p2,
                                                double *out);

// P(i and j not in A+B), `i < j`.
//
// # Safety
// `out` must be null or valid for writes.
enum SumsetStatus sumset_correlated_miss_pair(size_t n,
                                              size_t i,
                                              size_t j,
                                              double p,
                                              double p1,
                                              double p2,
                                              double *out);

// Accordion probabilities `x, y, z` at length `len`.
//
// # Safety
// `x`, `y`, `z` must be null or valid for writes.
enum SumsetStatus sumset_accordion(size_t len,
                                   double p,
                                   double p1,
                                   double p2,
                                   double *x,
                                   double *y,
                                   double *z);

// Spectral radius of the accordion governing matrix.
//
// # Safety
// `out` must be null or valid for writes.
enum SumsetStatus sumset_growth_rate(double p, double p1, double p2, double *out);

// Tabulates every fringe of width `l`. `threads == 0` uses all cores.
//
// # Safety
// `out` must be null or valid for writes.
enum SumsetStatus sumset_fringe_enumerate(size_t l,
                                          size_t a,
                                          size_t kmax,
                                          size_t threads,
                                          struct SumsetFringeTable **out);

// Reads a table written by [`sumset_fringe_save`] or the command line.
//
// # Safety
// `csv_path` must be null or a NUL-terminated string; `out` null or valid for writes.
enum SumsetStatus sumset_fringe_load(const char *csv_path, struct SumsetFringeTable **out);

// Writes the table as CSV plus its JSON sidecar.
//
// # Safety
// `table` must come from this library; `csv_path` must be a NUL-terminated string.
enum SumsetStatus sumset_fringe_save(const struct SumsetFringeTable *table, const char *csv_path);

// # Safety
// `table` must be null or come from this library, and not be used afterwards.
void sumset_fringe_free(struct SumsetFringeTable *table);

// Width, anchor and largest `k` of a table.
//
// # Safety
// `table` must come from this library; outputs must be null or valid for writes.
enum SumsetStatus sumset_fringe_shape(const struct SumsetFringeTable *table,
                                      size_t *l,
                                      size_t *a,
                                      size_t *kmax);

// `c[k][i]`, or `c_a[k][i]` when `anchored` is nonzero.
//
// # Safety
// `table` must come from this library; `out` null or valid for writes.
enum SumsetStatus sumset_fringe_count(const struct SumsetFringeTable *table,
                                      size_t k,
                                      size_t i,
                                      int32_t anchored,
                                      uint64_t *out);

// `min_a[k]` and `tau[k]`; `-1` where no fringe qualifies.
//
// # Safety
// `table` must come from this library; outputs must be null or valid for writes.
enum SumsetStatus sumset_fringe_minima(const struct SumsetFringeTable *table,
                                       size_t k,
                                       int64_t *min_a,
                                       int64_t *tau);

// `P(L_k)` and `P(L_k^a)`.
//
// # Safety
// `table` must come from this library; outputs must be null or valid for writes.
enum SumsetStatus sumset_fringe_prob(const struct SumsetFringeTable *table,
                                     size_t k,
                                     double p,
                                     double *lk,
                                     double *lka);

// Lower and upper bounds on the limiting probability of exactly `k` missing sums.
//
// # Safety
// `table` must come from this library; outputs must be null or valid for writes.
enum SumsetStatus sumset_fringe_bounds(const struct SumsetFringeTable *table,
                                       size_t k,
                                       double p,
                                       double *lower,
                                       double *upper);

// `LB(0) > UB(1) < LB(2)` at one `p`; `divot` is set to 1 or 0.
//
// # Safety
// `table` must come from this library; outputs must be null or valid for writes.
enum SumsetStatus sumset_fringe_certify_divot(const struct SumsetFringeTable *table,
                                              double p,
                                              double *lb0,
                                              double *ub1,
                                              double *lb2,
                                              int32_t *divot);

// Simulates `trials` draws of `A ⊆ [0, n-1]`.
//
// # Safety
// `out` must be null or valid for writes.
enum SumsetStatus sumset_simulate(size_t n,
                                  double p,
                                  uint64_t trials,
                                  uint64_t seed,
                                  int32_t force_zero,
                                  struct SumsetDistribution **out);

// Simulates the correlated pair `(A, B)`.
//
// # Safety
// `out` must be null or valid for writes.
enum SumsetStatus sumset_simulate_correlated(size_t n,
                                             double p,
                                             double p1,
                                             double p2,
                                             uint64_t trials,
                                             uint64_t seed,
                                             int32_t force_zero,
                                             struct SumsetDistribution **out);

// Number of histogram cells, `2n`.
//
// # Safety
// `d` must come from this library; `out` null or valid for writes.
enum SumsetStatus sumset_distribution_len(const struct SumsetDistribution *d, size_t *out);

// Trials that missed exactly `k` sums, and their frequency.
//
// # Safety
// `d` must come from this library; outputs must be null or valid for writes.
enum SumsetStatus sumset_distribution_get(const struct SumsetDistribution *d,
                                          size_t k,
                                          uint64_t *count,
                                          double *freq);

// Copies the counts into `buf`, which holds `cap` entries.
//
// # Safety
// `d` must come from this library; `buf` must be null or valid for `cap` writes.
enum SumsetStatus sumset_distribution_counts(const struct SumsetDistribution *d,
                                             uint64_t *buf,
                                             size_t cap);

// # Safety
// `d` must be null or come from this library, and not be used afterwards.
void sumset_distribution_free(struct SumsetDistribution *d);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUMSET_H */
