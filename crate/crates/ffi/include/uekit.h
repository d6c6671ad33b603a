#ifndef UEKIT_H
#define UEKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UekitStatus {
  UEKIT_STATUS_OK = 0,
  UEKIT_STATUS_NULL_POINTER = 1,
  UEKIT_STATUS_INVALID_INPUT = 2,
  // The quantity is undefined for this input (NA).
  UEKIT_STATUS_UNDEFINED = 3,
  UEKIT_STATUS_FACTORIZATION = 4,
  UEKIT_STATUS_PANIC = 5,
} UekitStatus;

// Scores computed from `passes × class_count` stochastic probabilities.
typedef enum UekitPassScore {
  UEKIT_PASS_SCORE_SMP = 0,
  UEKIT_PASS_SCORE_ENT_MC = 1,
  UEKIT_PASS_SCORE_PV = 2,
  UEKIT_PASS_SCORE_BALD = 3,
} UekitPassScore;

// Confidence-based metrics over `n` instances.
typedef enum UekitMetric {
  UEKIT_METRIC_ROC_AUC = 0,
  UEKIT_METRIC_C_SLOPE = 1,
  UEKIT_METRIC_CITL = 2,
  // Uses `bins` equal-width bins.
  UEKIT_METRIC_ECE = 3,
  UEKIT_METRIC_RC_AUC = 4,
  UEKIT_METRIC_NRC_AUC = 5,
} UekitMetric;

// Fitted Isolation Forest.
typedef struct UekitIsof UekitIsof;

// Fitted Local Outlier Factor model.
typedef struct UekitLof UekitLof;

// Fitted class centroids and shared precision matrix.
typedef struct UekitTrainStats UekitTrainStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread (empty after success).
const char *uekit_last_error(void);

// Library version as a static NUL-terminated string.
const char *uekit_version(void);

// Softmax response `1 - max p` of one probability row.
//
// # Safety
// `probs` must point to `class_count` doubles and `out` to one writable double.
enum UekitStatus uekit_sr(const double *probs, size_t class_count, double *out);

// Natural-log entropy of one probability row.
//
// # Safety
// As [`uekit_sr`].
enum UekitStatus uekit_ent(const double *probs, size_t class_count, double *out);

// One multi-pass score of a single instance.
//
// # Safety
// `probs` must point to `passes * class_count` doubles and `out` to one writable double.
enum UekitStatus uekit_pass_score(enum UekitPassScore kind,
                                  const double *probs,
                                  size_t passes,
                                  size_t class_count,
                                  double *out);

// Confidence `1 - minmax(u)`; a constant vector maps to 0.5.
//
// # Safety
// `scores` and `out` must each hold `n` doubles.
enum UekitStatus uekit_confidence(const double *scores, size_t n, double *out);

// One metric from correctness flags (non-zero = correct) and confidences in [0, 1].
//
// # Safety
// `correct` must hold `n` bytes, `conf` `n` doubles, and `out` one writable double.
enum UekitStatus uekit_metric(enum UekitMetric metric,
                              const uint8_t *correct,
                              const double *conf,
                              size_t n,
                              size_t bins,
                              double *out);

// Fits centroids and the pooled covariance from `n × dim` embeddings.
//
// # Safety
// `embeddings` must hold `n * dim` doubles, `labels` `n` entries, `out` one writable pointer.
enum UekitStatus uekit_train_stats_fit(const double *embeddings,
                                       const size_t *labels,
                                       size_t n,
                                       size_t dim,
                                       size_t class_count,
                                       struct UekitTrainStats **out);

// Minimum squared Mahalanobis distance of one embedding to the class centroids.
//
// # Safety
// `stats` must come from [`uekit_train_stats_fit`]; `h` must hold `dim` doubles.
enum UekitStatus uekit_train_stats_mahalanobis(const struct UekitTrainStats *stats,
                                               const double *h,
                                               size_t dim,
                                               double *out);

// # Safety
// `stats` must come from [`uekit_train_stats_fit`] and not be used afterwards. Null is ignored.
void uekit_train_stats_free(struct UekitTrainStats *stats);

// Fits LOF on `n × dim` training embeddings with `k` neighbours.
//
// # Safety
// `embeddings` must hold `n * dim` doubles; `out` one writable pointer.
enum UekitStatus uekit_lof_fit(const double *embeddings,
                               size_t n,
                               size_t dim,
                               size_t k,
                               struct UekitLof **out);

// # Safety
// `model` must come from [`uekit_lof_fit`]; `h` must hold `dim` doubles.
enum UekitStatus uekit_lof_score(const struct UekitLof *model,
                                 const double *h,
                                 size_t dim,
                                 double *out);

// # Safety
// `model` must come from [`uekit_lof_fit`] and not be used afterwards. Null is ignored.
void uekit_lof_free(struct UekitLof *model);

// Fits an Isolation Forest; identical arguments give identical forests.
//
// # Safety
// `embeddings` must hold `n * dim` doubles; `out` one writable pointer.
enum UekitStatus uekit_isof_fit(const double *embeddings,
                                size_t n,
                                size_t dim,
                                size_t trees,
                                size_t subsample,
                                uint64_t seed,
                                struct UekitIsof **out);

// Anomaly score in (0, 1]; higher is more isolated.
//
// # Safety
// `model` must come from [`uekit_isof_fit`]; `h` must hold `dim` doubles.
enum UekitStatus uekit_isof_score(const struct UekitIsof *model,
                                  const double *h,
                                  size_t dim,
                                  double *out);

// # Safety
// `model` must come from [`uekit_isof_fit`] and not be used afterwards. Null is ignored.
void uekit_isof_free(struct UekitIsof *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UEKIT_H */
