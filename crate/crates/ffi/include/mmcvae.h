#ifndef MMCVAE_H
#define MMCVAE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum MmcvaeStatus {
  MMCVAE_STATUS_OK = 0,
  MMCVAE_STATUS_NULL_POINTER = 1,
  MMCVAE_STATUS_INVALID_INPUT = 2,
  MMCVAE_STATUS_DIMENSION = 3,
  MMCVAE_STATUS_CONFIG = 4,
  MMCVAE_STATUS_NON_FINITE = 5,
  MMCVAE_STATUS_PARSE = 6,
  MMCVAE_STATUS_CHECKPOINT = 7,
  MMCVAE_STATUS_IO = 8,
  MMCVAE_STATUS_ORACLE = 9,
  MMCVAE_STATUS_PANIC = 10,
} MmcvaeStatus;

typedef enum MmcvaeLikelihood {
  MMCVAE_LIKELIHOOD_GAUSSIAN = 0,
  MMCVAE_LIKELIHOOD_BERNOULLI = 1,
} MmcvaeLikelihood;

typedef enum MmcvaeLatent {
  /**
   * Shared latent `z`.
   */
  MMCVAE_LATENT_BACKGROUND = 0,
  /**
   * Target-specific latent `s`.
   */
  MMCVAE_LATENT_SALIENT = 1,
} MmcvaeLatent;

typedef enum MmcvaeKeep {
  MMCVAE_KEEP_BOTH = 0,
  MMCVAE_KEEP_BACKGROUND_ONLY = 1,
  MMCVAE_KEEP_SALIENT_ONLY = 2,
} MmcvaeKeep;

/**
 * Opaque model handle.
 */
typedef struct MmcvaeModel MmcvaeModel;

/**
 * Training settings. A `kernel_gamma` of zero or less selects the median
 * heuristic bandwidth.
 */
typedef struct MmcvaeTrainConfig {
  double lambda1;
  double lambda2;
  double lr;
  double beta1;
  double beta2;
  double eps;
  size_t batch_size;
  size_t epochs;
  uint64_t seed;
  bool zero_bias_decoder;
  double kernel_gamma;
} MmcvaeTrainConfig;

typedef struct MmcvaeArchitecture {
  size_t input_dim;
  size_t hidden_dim;
  size_t z_dim;
  size_t s_dim;
  enum MmcvaeLikelihood likelihood;
  bool zero_bias_decoder;
} MmcvaeArchitecture;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mmcvae_version(void);

/**
 * Message for the most recent failure on this thread, or NULL if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *mmcvae_last_error(void);

void mmcvae_clear_error(void);

/**
 * Default training settings.
 */
struct MmcvaeTrainConfig mmcvae_train_config_default(void);

/**
 * Freshly initialized model.
 */
enum MmcvaeStatus mmcvae_model_new(const struct MmcvaeArchitecture *arch,
                                   uint64_t seed,
                                   struct MmcvaeModel **out);

enum MmcvaeStatus mmcvae_model_load(const char *path, struct MmcvaeModel **out);

enum MmcvaeStatus mmcvae_model_save(const struct MmcvaeModel *model, const char *path);

/**
 * Releases a handle; NULL is ignored.
 */
void mmcvae_model_free(struct MmcvaeModel *model);

enum MmcvaeStatus mmcvae_model_architecture(const struct MmcvaeModel *model,
                                            struct MmcvaeArchitecture *out);

/**
 * Posterior mean (and optionally log-variance) of one latent block.
 * `x` is `n_rows × input_dim`; outputs are `n_rows × latent_dim`.
 * `logvar_out` may be NULL.
 */
enum MmcvaeStatus mmcvae_model_encode(const struct MmcvaeModel *model,
                                      const double *x,
                                      size_t n_rows,
                                      enum MmcvaeLatent latent,
                                      double *mu_out,
                                      double *logvar_out);

/**
 * Decoder mean for latent codes `z` (`n_rows × z_dim`) and `s`
 * (`n_rows × s_dim`); writes `n_rows × input_dim` values.
 */
enum MmcvaeStatus mmcvae_model_generate(const struct MmcvaeModel *model,
                                        const double *z,
                                        const double *s,
                                        size_t n_rows,
                                        double *out);

/**
 * Reconstruction from posterior means with the dropped block set to zero.
 */
enum MmcvaeStatus mmcvae_model_reconstruct(const struct MmcvaeModel *model,
                                           const double *x,
                                           size_t n_rows,
                                           enum MmcvaeKeep keep,
                                           double *out);

/**
 * Trains a new model on `target` (`n_target × input_dim`) and `background`
 * (`n_background × input_dim`). `final_loss` may be NULL; otherwise it
 * receives the mean objective of the last epoch. The architecture and the
 * config must agree on `zero_bias_decoder`.
 */
enum MmcvaeStatus mmcvae_train(const struct MmcvaeArchitecture *arch,
                               const struct MmcvaeTrainConfig *config,
                               const double *target,
                               size_t n_target,
                               const double *background,
                               size_t n_background,
                               struct MmcvaeModel **out,
                               double *final_loss);

/**
 * Biased squared MMD between `x` (`n_x × dim`) and `y` (`n_y × dim`) under a
 * Gaussian kernel; `gamma <= 0` selects the median heuristic.
 */
enum MmcvaeStatus mmcvae_mmd(const double *x,
                             size_t n_x,
                             const double *y,
                             size_t n_y,
                             size_t dim,
                             double gamma,
                             double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MMCVAE_H */
