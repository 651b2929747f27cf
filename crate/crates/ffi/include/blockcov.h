#ifndef BLOCKCOV_H
#define BLOCKCOV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum BcStatus {
  BC_STATUS_OK = 0,
  BC_STATUS_NULL_POINTER = 1,
  BC_STATUS_DIMENSION = 2,
  BC_STATUS_PARAMETER = 3,
  BC_STATUS_DEFINITENESS = 4,
  BC_STATUS_INSUFFICIENT_DATA = 5,
  BC_STATUS_CONVERGENCE = 6,
  BC_STATUS_PARSE = 7,
  BC_STATUS_IO = 8,
  BC_STATUS_OUT_OF_RANGE = 9,
  BC_STATUS_PANIC = 10,
} BcStatus;

typedef enum BcRule {
  BC_RULE_HARD = 0,
  BC_RULE_SOFT = 1,
  BC_RULE_ADAPTIVE_LASSO = 2,
} BcRule;

typedef enum BcBlockNorm {
  BC_BLOCK_NORM_SPECTRAL = 0,
  BC_BLOCK_NORM_FROBENIUS = 1,
} BcBlockNorm;

typedef enum BcLoss {
  BC_LOSS_SPECTRAL = 0,
  BC_LOSS_FROBENIUS = 1,
  BC_LOSS_L1 = 2,
} BcLoss;

// Opaque dense matrix.
typedef struct BcMatrix BcMatrix;

// Opaque block partition.
typedef struct BcPartition BcPartition;

// One block of a partition; ranges are 0-based and half-open.
typedef struct BcBlock {
  size_t row_start;
  size_t row_end;
  size_t col_start;
  size_t col_end;
  uint32_t level;
  bool diagonal;
} BcBlock;

// Estimator settings. Fill with `bc_estimator_config_default` first.
typedef struct BcEstimatorConfig {
  double lambda0;
  // 0 selects `max(1, floor(ln p))`.
  size_t k0;
  enum BcRule rule;
  // Adaptive lasso exponent, ignored by the other rules.
  double eta;
  enum BcBlockNorm block_norm;
  // Eigenvalue floor for the PSD projection.
  double epsilon;
  // Cap on inverted eigenvalues; values <= 0 select the sample size.
  double inverse_cap;
} BcEstimatorConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread, or NULL. Valid until the
// next call into this library from the same thread.
const char *bc_last_error(void);

// Static name of a status code.
const char *bc_status_name(enum BcStatus status);

// Copies `rows * cols` row-major values into a new matrix.
enum BcStatus bc_matrix_new(size_t rows, size_t cols, const double *data, struct BcMatrix **out);

enum BcStatus bc_matrix_identity(size_t p, struct BcMatrix **out);

void bc_matrix_free(struct BcMatrix *m);

// Row count, or 0 for NULL.
size_t bc_matrix_rows(const struct BcMatrix *m);

// Column count, or 0 for NULL.
size_t bc_matrix_cols(const struct BcMatrix *m);

enum BcStatus bc_matrix_get(const struct BcMatrix *m, size_t i, size_t j, double *out);

// Copies the row-major entries into `buf`, which must hold `len >= rows * cols` values.
enum BcStatus bc_matrix_copy_data(const struct BcMatrix *m, double *buf, size_t len);

enum BcStatus bc_matrix_read_csv(const char *path, struct BcMatrix **out);

enum BcStatus bc_matrix_write_csv(const struct BcMatrix *m, const char *path);

// Builds the block partition of `0..p`; `k0 = 0` selects the default.
enum BcStatus bc_partition_new(size_t p, size_t k0, struct BcPartition **out);

void bc_partition_free(struct BcPartition *part);

// Number of blocks, or 0 for NULL.
size_t bc_partition_len(const struct BcPartition *part);

// Base block size, or 0 for NULL.
size_t bc_partition_k0(const struct BcPartition *part);

enum BcStatus bc_partition_block(const struct BcPartition *part, size_t index, struct BcBlock *out);

struct BcEstimatorConfig bc_estimator_config_default(void);

// Sample covariance (divisor n - 1) of an `n x p` observation matrix.
enum BcStatus bc_sample_covariance(const struct BcMatrix *data, struct BcMatrix **out);

// Block thresholding of a sample covariance computed from `n` observations.
// `part` may be NULL to build one from `config`.
enum BcStatus bc_block_threshold(const struct BcMatrix *sigma_bar,
                                 const struct BcPartition *part,
                                 const struct BcEstimatorConfig *config,
                                 size_t n,
                                 struct BcMatrix **out);

// Full pipeline on observations. Either output may be NULL to skip it;
// `omega_out` receives the precision estimate built from the raw estimate.
enum BcStatus bc_estimate(const struct BcMatrix *data,
                          const struct BcEstimatorConfig *config,
                          struct BcMatrix **sigma_out,
                          struct BcMatrix **omega_out);

enum BcStatus bc_psd_project(const struct BcMatrix *m, double epsilon, struct BcMatrix **out);

// `U diag(min(1/d, cap)) U^T`, non-positive eigenvalues mapping to `cap`.
enum BcStatus bc_precision_estimate(const struct BcMatrix *m, double cap, struct BcMatrix **out);

enum BcStatus bc_banding_estimate(const struct BcMatrix *m, size_t k, struct BcMatrix **out);

// Odd `k` is rounded down; `k < 2` is a parameter error.
enum BcStatus bc_tapering_estimate(const struct BcMatrix *m, size_t k, struct BcMatrix **out);

enum BcStatus bc_spectral_norm(const struct BcMatrix *m, double *out);

enum BcStatus bc_loss(const struct BcMatrix *estimate,
                      const struct BcMatrix *truth,
                      enum BcLoss metric,
                      double *out);

enum BcStatus bc_generate_model1(size_t p, double rho, uint64_t seed, struct BcMatrix **out);

enum BcStatus bc_generate_model2(size_t p, uint64_t seed, struct BcMatrix **out);

// `n` rows drawn i.i.d. from N(0, sigma).
enum BcStatus bc_sample_gaussian(const struct BcMatrix *sigma,
                                 size_t n,
                                 uint64_t seed,
                                 struct BcMatrix **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLOCKCOV_H */
