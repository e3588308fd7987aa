#ifndef BAM_FFI_H
#define BAM_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

#define BAM_TASK_TOY 0

#define BAM_TASK_LINEAR_GAUSSIAN 1

#define BAM_TASK_SIR 2

#define BAM_TASK_LOTKA_VOLTERRA 3

#define BAM_TASK_BVEP 4

#define BAM_ZONE_HEALTHY 0

#define BAM_ZONE_PROPAGATION 1

#define BAM_ZONE_EPILEPTOGENIC 2

typedef enum BamStatus {
  BAM_OK = 0,
  BAM_NULL_POINTER = 1,
  BAM_INVALID_ARGUMENT = 2,
  BAM_IO = 3,
  BAM_FORMAT = 4,
  BAM_DIMENSION = 5,
  BAM_OUT_OF_SUPPORT = 6,
  // Non-finite values, divergence, integration or convergence failure.
  BAM_NUMERICAL = 7,
  BAM_CONFIG = 8,
  BAM_BUFFER_TOO_SMALL = 9,
  BAM_PANIC = 10,
} BamStatus;

// Opaque set of simulated `(theta, x)` pairs.
typedef struct BamDataset BamDataset;

// Opaque trained posterior estimator.
typedef struct BamEstimator BamEstimator;

// Opaque trained cost regressor.
typedef struct BamRegressor BamRegressor;

// Training hyperparameters. `fixed_actions` of 0 resamples BAM actions
// every epoch; `n > 0` draws `n` fixed actions per pair.
typedef struct BamTrainOptions {
  double learning_rate;
  size_t batch_size;
  double validation_fraction;
  size_t max_epochs;
  size_t patience;
  size_t components;
  size_t hidden_units;
  size_t hidden_layers;
  size_t mc_samples;
  size_t validation_actions;
  size_t fixed_actions;
} BamTrainOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL if none failed.
// Valid until the next failing call on the same thread.
const char *bam_last_error(void);

const char *bam_version(void);

// Seed of stream `index` derived from `master`.
uint64_t bam_split_seed(uint64_t master, uint64_t index);

// Zone index of an excitability value.
uint8_t bam_classify_zone(double eta);

// Parameter and observation dimensions of a task.
//
// # Safety
// `param_dim` and `obs_dim` must be valid for writes.
enum BamStatus bam_task_dims(uint8_t task_id, size_t *param_dim, size_t *obs_dim);

// `c(theta, a)`; `marginal` selects the Lotka-Volterra cost and is 0
// otherwise. BVEP actions are zone indices.
//
// # Safety
// `theta` must point to `theta_len` doubles; `cost` must be writable.
enum BamStatus bam_cost(uint8_t task_id,
                        size_t marginal,
                        const double *theta,
                        size_t theta_len,
                        double action_value,
                        double *cost);

// Default hyperparameters for a task.
//
// # Safety
// `options` must be valid for writes.
enum BamStatus bam_train_options_default(uint8_t task_id, struct BamTrainOptions *options);

// Simulates `n` prior-predictive pairs.
//
// # Safety
// `dataset` must be valid for writes.
enum BamStatus bam_dataset_generate(uint8_t task_id,
                                    size_t n,
                                    uint64_t seed,
                                    size_t jobs,
                                    struct BamDataset **dataset);

// # Safety
// `path` must be a NUL-terminated string; `dataset` must be valid for writes.
enum BamStatus bam_dataset_read(const char *path, struct BamDataset **dataset);

// # Safety
// `dataset` must be a live handle; `path` a NUL-terminated string.
enum BamStatus bam_dataset_write(const struct BamDataset *dataset, const char *path);

// Number of pairs, or 0 for NULL.
//
// # Safety
// `dataset` must be NULL or a live handle.
size_t bam_dataset_len(const struct BamDataset *dataset);

// Task id of the dataset.
//
// # Safety
// `dataset` must be a live handle; `task_id` writable.
enum BamStatus bam_dataset_task(const struct BamDataset *dataset, uint8_t *task_id);

// Copies pair `index` into caller buffers of at least the task dimensions.
//
// # Safety
// `theta` and `x` must be writable for `theta_cap` and `x_cap` doubles.
enum BamStatus bam_dataset_pair(const struct BamDataset *dataset,
                                size_t index,
                                double *theta,
                                size_t theta_cap,
                                double *x,
                                size_t x_cap);

// # Safety
// `dataset` must be NULL or a handle not yet freed.
void bam_dataset_free(struct BamDataset *dataset);

// Trains a cost regressor on `dataset`. `options` may be NULL for task defaults.
//
// # Safety
// `dataset` must be a live handle; `regressor` valid for writes.
enum BamStatus bam_regressor_train(const struct BamDataset *dataset,
                                   const struct BamTrainOptions *options,
                                   size_t marginal,
                                   uint64_t seed,
                                   struct BamRegressor **regressor);

// # Safety
// `path` must be a NUL-terminated string; `regressor` valid for writes.
enum BamStatus bam_regressor_load(const char *path, struct BamRegressor **regressor);

// # Safety
// `regressor` must be a live handle; `path` a NUL-terminated string.
enum BamStatus bam_regressor_save(const struct BamRegressor *regressor, const char *path);

// Predicted expected cost of one action.
//
// # Safety
// `x` must point to `x_len` doubles; `cost` must be writable.
enum BamStatus bam_regressor_expected_cost(const struct BamRegressor *regressor,
                                           const double *x,
                                           size_t x_len,
                                           double action_value,
                                           double *cost);

// Minimizer of the predicted expected cost over the default action grid.
//
// # Safety
// `x` must point to `x_len` doubles; `action` and `cost` must be writable.
enum BamStatus bam_regressor_optimal_action(const struct BamRegressor *regressor,
                                            const double *x,
                                            size_t x_len,
                                            double *action_value,
                                            double *cost);

// # Safety
// `regressor` must be NULL or a handle not yet freed.
void bam_regressor_free(struct BamRegressor *regressor);

// Trains a posterior estimator on `dataset`. `options` may be NULL.
//
// # Safety
// `dataset` must be a live handle; `estimator` valid for writes.
enum BamStatus bam_estimator_train(const struct BamDataset *dataset,
                                   const struct BamTrainOptions *options,
                                   uint64_t seed,
                                   struct BamEstimator **estimator);

// # Safety
// `path` must be a NUL-terminated string; `estimator` valid for writes.
enum BamStatus bam_estimator_load(const char *path, struct BamEstimator **estimator);

// # Safety
// `estimator` must be a live handle; `path` a NUL-terminated string.
enum BamStatus bam_estimator_save(const struct BamEstimator *estimator, const char *path);

// Draws `n` posterior samples into `samples` (row-major, `n * param_dim`).
//
// # Safety
// `x` must point to `x_len` doubles; `samples` writable for `capacity` doubles.
enum BamStatus bam_estimator_sample(const struct BamEstimator *estimator,
                                    const double *x,
                                    size_t x_len,
                                    size_t n,
                                    uint64_t seed,
                                    double *samples,
                                    size_t capacity);

// Monte-Carlo expected cost of one action from `m` posterior draws.
//
// # Safety
// `x` must point to `x_len` doubles; `cost` must be writable.
enum BamStatus bam_estimator_expected_cost(const struct BamEstimator *estimator,
                                           const double *x,
                                           size_t x_len,
                                           size_t marginal,
                                           double action_value,
                                           size_t m,
                                           uint64_t seed,
                                           double *cost);

// NPE-MC decision over the default action grid, from one set of `m` draws.
//
// # Safety
// `x` must point to `x_len` doubles; `action` and `cost` must be writable.
enum BamStatus bam_estimator_optimal_action(const struct BamEstimator *estimator,
                                            const double *x,
                                            size_t x_len,
                                            size_t marginal,
                                            size_t m,
                                            uint64_t seed,
                                            double *action_value,
                                            double *cost);

// # Safety
// `estimator` must be NULL or a handle not yet freed.
void bam_estimator_free(struct BamEstimator *estimator);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BAM_FFI_H */
