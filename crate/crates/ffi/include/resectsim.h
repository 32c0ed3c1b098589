#ifndef RESECTSIM_H
#define RESECTSIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call.
 */
typedef enum RsStatus {
  RS_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  RS_STATUS_NULL_POINTER = 1,
  /**
   * A scalar argument or string was malformed.
   */
  RS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A configuration value is invalid; the message names the key.
   */
  RS_STATUS_CONFIG_ERROR = 3,
  /**
   * The input volumes are unusable (no gray matter, no ventricles, ...).
   */
  RS_STATUS_INPUT_ERROR = 4,
  /**
   * Image and parcellation grids differ.
   */
  RS_STATUS_GRID_MISMATCH = 5,
  /**
   * A valid request failed while running, e.g. cavity placement.
   */
  RS_STATUS_RUNTIME_ERROR = 6,
  /**
   * An internal panic was caught.
   */
  RS_STATUS_PANIC = 7,
} RsStatus;

/**
 * Simulation parameters and label scheme.
 */
typedef struct RsConfig RsConfig;

/**
 * Output of one simulation.
 */
typedef struct RsResult RsResult;

/**
 * Subject inputs with cached per-subject statistics, for repeated draws.
 */
typedef struct RsSimulator RsSimulator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failed call on this thread, or an empty
 * string. Valid until the next call on this thread.
 */
const char *rs_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rs_version(void);

/**
 * Default parameters with the `builtin:gif` label scheme.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum RsStatus rs_config_new(struct RsConfig **out);

/**
 * Parameters from TOML text, in the same format as the CLI's `--config`.
 * A `scheme` key replaces the default `builtin:gif` scheme; relative scheme
 * paths resolve against the working directory.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum RsStatus rs_config_from_toml(const char *toml, struct RsConfig **out);

/**
 * Replaces the label scheme: `builtin:gif`, `builtin:phantom` or a path to
 * a scheme TOML file.
 *
 * # Safety
 * `config` must be a live handle; `spec` a NUL-terminated string.
 */
enum RsStatus rs_config_set_scheme(struct RsConfig *config, const char *spec);

/**
 * Sets the cavity shape: `noisy`, `ellipsoid` or `cuboid`.
 *
 * # Safety
 * `config` must be a live handle; `shape` a NUL-terminated string.
 */
enum RsStatus rs_config_set_shape(struct RsConfig *config, const char *shape);

/**
 * # Safety
 * `config` must be null or a handle not yet freed.
 */
void rs_config_free(struct RsConfig *config);

/**
 * One simulation on in-memory arrays. `image` and `labels` hold
 * `dims[0]·dims[1]·dims[2]` values each; both affines must agree within
 * 1e-6. The output is bit-identical to the CLI on files with the same
 * contents, parameters and seed.
 *
 * # Safety
 * Array pointers must reference the stated number of elements, affines 16
 * values, `dims` 3 values; `config` must be live and `out` writable.
 */
enum RsStatus rs_simulate_arrays(const float *image,
                                 const double *image_affine,
                                 const uint32_t *labels,
                                 const double *labels_affine,
                                 const uintptr_t *dims,
                                 const struct RsConfig *config,
                                 uint64_t seed,
                                 struct RsResult **out);

/**
 * Copies a subject's arrays and prepares its per-subject statistics so
 * that repeated draws skip that work. The scheme is taken from `config`.
 *
 * # Safety
 * As for [`rs_simulate_arrays`].
 */
enum RsStatus rs_simulator_new(const float *image,
                               const double *image_affine,
                               const uint32_t *labels,
                               const double *labels_affine,
                               const uintptr_t *dims,
                               const struct RsConfig *config,
                               struct RsSimulator **out);

/**
 * One draw from a prepared subject, using the parameters of `config`
 * (its scheme is ignored).
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum RsStatus rs_simulator_run(const struct RsSimulator *simulator,
                               const struct RsConfig *config,
                               uint64_t seed,
                               struct RsResult **out);

/**
 * # Safety
 * `simulator` must be null or a handle not yet freed.
 */
void rs_simulator_free(struct RsSimulator *simulator);

/**
 * Number of voxels in each output array.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
uintptr_t rs_result_len(const struct RsResult *result);

/**
 * Simulated image, valid until the result is freed. Null for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
const float *rs_result_image(const struct RsResult *result);

/**
 * Cavity label (0 or 1), valid until the result is freed.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
const uint8_t *rs_result_label(const struct RsResult *result);

/**
 * Simulation metadata as a JSON object, valid until the result is freed.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
const char *rs_result_meta_json(const struct RsResult *result);

/**
 * Copies the image into `dst`, which must hold `len == rs_result_len`
 * values.
 *
 * # Safety
 * `dst` must be writable for `len` floats.
 */
enum RsStatus rs_result_copy_image(const struct RsResult *result, float *dst, uintptr_t len);

/**
 * Copies the label into `dst`, which must hold `len == rs_result_len`
 * bytes.
 *
 * # Safety
 * `dst` must be writable for `len` bytes.
 */
enum RsStatus rs_result_copy_label(const struct RsResult *result, uint8_t *dst, uintptr_t len);

/**
 * # Safety
 * `result` must be null or a handle not yet freed.
 */
void rs_result_free(struct RsResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RESECTSIM_H */
