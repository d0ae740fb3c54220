#ifndef TRAJPRED_H
#define TRAJPRED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TrajpredStatus {
  TRAJPRED_STATUS_OK = 0,
  TRAJPRED_STATUS_NULL_POINTER = 1,
  TRAJPRED_STATUS_INVALID_ARGUMENT = 2,
  TRAJPRED_STATUS_IO = 3,
  TRAJPRED_STATUS_LOAD = 4,
  TRAJPRED_STATUS_NUMERIC = 5,
  TRAJPRED_STATUS_CONTRACT = 6,
  TRAJPRED_STATUS_PANIC = 7,
} TrajpredStatus;

/**
 * Model configuration and parameters.
 */
typedef struct TrajpredModel TrajpredModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Observed steps per agent the model expects.
 */
size_t trajpred_t_obs(void);

/**
 * Predicted steps per agent.
 */
size_t trajpred_t_pred(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next call into the library from the same thread.
 */
const char *trajpred_last_error(void);

/**
 * Freshly initialized model with the default architecture.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum TrajpredStatus trajpred_model_new_default(uint64_t seed, struct TrajpredModel **out);

/**
 * Loads a checkpoint. `config_path` may be NULL for the default architecture.
 *
 * # Safety
 * Paths must be NUL-terminated strings or NULL; `out` must be writable.
 */
enum TrajpredStatus trajpred_model_load(const char *config_path,
                                        const char *checkpoint_path,
                                        struct TrajpredModel **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `model` must come from this library and must not be used afterwards.
 */
void trajpred_model_free(struct TrajpredModel *model);

/**
 * Predicts the next `trajpred_t_pred()` positions of one agent.
 *
 * * `observed`: `trajpred_t_obs()` points.
 * * `neighbors`: `n_neighbors` tracks of `trajpred_t_obs()` points each;
 *   may be NULL when `n_neighbors` is 0.
 * * `neighbor_valid`: one byte per neighbor point (nonzero = observed), or
 *   NULL when every point is observed.
 * * `image_rgb`: optional `image_height × image_width × 3` bytes of the scene
 *   image in the same world frame, required by patch-backbone models.
 * * `out_trajectory`: room for `trajpred_t_pred()` points.
 * * `out_goal`: room for one point, or NULL.
 *
 * # Safety
 * Every non-NULL pointer must reference at least the sizes listed above.
 */
enum TrajpredStatus trajpred_model_predict(const struct TrajpredModel *model,
                                           const double *observed,
                                           const double *neighbors,
                                           const uint8_t *neighbor_valid,
                                           size_t n_neighbors,
                                           const uint8_t *image_rgb,
                                           size_t image_height,
                                           size_t image_width,
                                           double units_per_pixel,
                                           double image_origin_x,
                                           double image_origin_y,
                                           double *out_trajectory,
                                           double *out_goal);

/**
 * Constant-velocity extrapolation of the last two of `n_observed` points into
 * `trajpred_t_pred()` points.
 *
 * # Safety
 * `observed` holds `n_observed` points; `out` has room for `trajpred_t_pred()`.
 */
enum TrajpredStatus trajpred_linear_baseline(const double *observed,
                                             size_t n_observed,
                                             double *out);

/**
 * Average displacement error of `n_agents` trajectories of `steps` points.
 *
 * # Safety
 * `preds` and `gts` each hold `n_agents * steps` points; `out` is writable.
 */
enum TrajpredStatus trajpred_ade(const double *preds,
                                 const double *gts,
                                 size_t n_agents,
                                 size_t steps,
                                 double *out);

/**
 * Final displacement error of `n_agents` trajectories of `steps` points.
 *
 * # Safety
 * Same layout as [`trajpred_ade`].
 */
enum TrajpredStatus trajpred_fde(const double *preds,
                                 const double *gts,
                                 size_t n_agents,
                                 size_t steps,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRAJPRED_H */
