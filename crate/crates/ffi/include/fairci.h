/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef FAIRCI_H
#define FAIRCI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FairciStatus {
  FAIRCI_STATUS_OK = 0,
  FAIRCI_STATUS_NULL_POINTER = 1,
  FAIRCI_STATUS_INVALID_ARGUMENT = 2,
  FAIRCI_STATUS_INVALID_ALPHA = 3,
  FAIRCI_STATUS_DEGENERATE_DENOMINATOR = 4,
  FAIRCI_STATUS_NEGATIVE_QUADRATIC_FORM = 5,
  FAIRCI_STATUS_ZERO_SIGMA = 6,
  FAIRCI_STATUS_EMPTY_INPUT = 7,
  FAIRCI_STATUS_LABELS_MISSING = 8,
  FAIRCI_STATUS_MIXED_LABEL_PRESENCE = 9,
  FAIRCI_STATUS_INVALID_COVARIANCE = 10,
  FAIRCI_STATUS_INVALID_DISTRIBUTION = 11,
  FAIRCI_STATUS_IO_ERROR = 12,
  FAIRCI_STATUS_MALFORMED_INPUT = 13,
  FAIRCI_STATUS_MISSING_COLUMN = 14,
  FAIRCI_STATUS_INVALID_SCHEMA = 15,
  FAIRCI_STATUS_DIGEST_MISMATCH = 16,
  FAIRCI_STATUS_NETWORK_ERROR = 17,
  FAIRCI_STATUS_UNKNOWN_PRESET = 18,
  FAIRCI_STATUS_NOT_CACHED = 19,
  FAIRCI_STATUS_INTERNAL = 99,
} FairciStatus;

// Ratio metrics, in the order of the library's `Metric::ALL`.
typedef enum FairciMetric {
  FAIRCI_METRIC_DIA = 0,
  FAIRCI_METRIC_DI_TRUE = 1,
  FAIRCI_METRIC_CA1 = 2,
  FAIRCI_METRIC_CA0 = 3,
  FAIRCI_METRIC_CU1 = 4,
  FAIRCI_METRIC_CU0 = 5,
} FairciMetric;

// Opaque cell-count table.
typedef struct FairciCellCounts FairciCellCounts;

// Opaque ingested table.
typedef struct FairciTable FairciTable;

typedef struct FairciEstimate {
  double point;
  // Asymptotic standard deviation of sqrt(n) * (estimate - ratio).
  double sigma;
  uint64_t n;
  double alpha;
  double lower;
  double upper;
  // Some coordinate count is below the small-cell threshold.
  bool small_cell;
} FairciEstimate;

typedef struct FairciTest {
  double statistic;
  double p_value;
  bool reject_h0;
  double beta;
  double alpha;
} FairciTest;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread; empty after a success.
const char *fairci_last_error(void);

// Library version, a static NUL-terminated string.
const char *fairci_version(void);

// Cell table from the 8 joint counts, indexed `[g][y][s]` (row-major:
// counts[4*g + 2*y + s]).
//
// # Safety
// `counts` must point to 8 readable values; `out` must be writable.
enum FairciStatus fairci_cells_new_joint(const uint64_t *counts, struct FairciCellCounts **out);

// Label-free cell table from the 4 counts indexed `[g][s]` (counts[2*g + s]).
//
// # Safety
// `counts` must point to 4 readable values; `out` must be writable.
enum FairciStatus fairci_cells_new_marginal(const uint64_t *counts, struct FairciCellCounts **out);

// # Safety
// `cells` must be NULL or a handle from this library not yet freed.
void fairci_cells_free(struct FairciCellCounts *cells);

// Number of records behind the table, 0 for NULL.
//
// # Safety
// `cells` must be NULL or a live handle.
uint64_t fairci_cells_n(const struct FairciCellCounts *cells);

// Point estimate, sigma and the level 1 - alpha interval of `metric`.
//
// # Safety
// `cells` must be a live handle; `out` must be writable.
enum FairciStatus fairci_estimate(const struct FairciCellCounts *cells,
                                  enum FairciMetric metric,
                                  double alpha,
                                  struct FairciEstimate *out);

// One-sided test of H0: ratio <= beta at level alpha.
//
// # Safety
// `out` must be writable.
enum FairciStatus fairci_one_sided_test(double point,
                                        double sigma,
                                        uint64_t n,
                                        double beta,
                                        double alpha,
                                        struct FairciTest *out);

// point ± z(1 - alpha/2) * sigma / sqrt(n).
//
// # Safety
// `lower` and `upper` must be writable.
enum FairciStatus fairci_clt_interval(double point,
                                      double sigma,
                                      uint64_t n,
                                      double alpha,
                                      double *lower,
                                      double *upper);

// Standard normal CDF.
double fairci_normal_cdf(double x);

// Standard normal quantile; `p` must lie in (0, 1).
//
// # Safety
// `out` must be writable.
enum FairciStatus fairci_normal_quantile(double p, double *out);

// Reads a comma-delimited file with a header row and maps it with a JSON
// schema (same keys as the CLI's schema file).
//
// # Safety
// `path` and `schema_json` must be NUL-terminated; `out` must be writable.
enum FairciStatus fairci_table_load(const char *path,
                                    const char *schema_json,
                                    struct FairciTable **out);

// Loads a built-in preset from `cache_dir`, downloading it first unless
// `offline` is set.
//
// # Safety
// `preset` and `cache_dir` must be NUL-terminated; `out` must be writable.
enum FairciStatus fairci_table_load_preset(const char *preset,
                                           const char *cache_dir,
                                           bool offline,
                                           struct FairciTable **out);

// # Safety
// `table` must be NULL or a live handle.
void fairci_table_free(struct FairciTable *table);

// Retained records, 0 for NULL.
//
// # Safety
// `table` must be NULL or a live handle.
uint64_t fairci_table_len(const struct FairciTable *table);

// Rows dropped during ingestion, 0 for NULL.
//
// # Safety
// `table` must be NULL or a live handle.
uint64_t fairci_table_dropped(const struct FairciTable *table);

// Cell counts of an ingested table. The new handle is owned by the caller.
//
// # Safety
// `table` must be a live handle; `out` must be writable.
enum FairciStatus fairci_table_cells(const struct FairciTable *table,
                                     struct FairciCellCounts **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAIRCI_H */
