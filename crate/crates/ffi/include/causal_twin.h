#ifndef CAUSAL_TWIN_H
#define CAUSAL_TWIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Values match the CLI exit codes where
 * both exist.
 */
typedef enum CtStatus {
  CT_STATUS_OK = 0,
  CT_STATUS_IO = 1,
  CT_STATUS_INVALID_ARGUMENT = 2,
  CT_STATUS_PARSE = 3,
  CT_STATUS_VALIDATION = 4,
  CT_STATUS_NUMERICAL = 5,
  CT_STATUS_NULL_POINTER = 10,
  CT_STATUS_BUFFER_TOO_SMALL = 11,
  CT_STATUS_PANIC = 12,
} CtStatus;

/**
 * Estimation mode for [`ct_estimate`].
 */
typedef enum CtMode {
  CT_MODE_FILTER = 0,
  CT_MODE_SMOOTH = 1,
  CT_MODE_FIXED_LAG = 2,
} CtMode;

/**
 * Streaming fixed-lag smoother.
 */
typedef struct CtFixedLag CtFixedLag;

/**
 * Observed multichannel series.
 */
typedef struct CtSeries CtSeries;

/**
 * Estimated factor trajectory: one row per estimated sample index.
 */
typedef struct CtTrajectory CtTrajectory;

/**
 * Noise settings: random-walk variance `q`, measurement variance `r`,
 * initial factor variance `p0`.
 */
typedef struct CtNoise {
  double q;
  double r;
  double p0;
} CtNoise;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. The
 * pointer stays valid until the next failing call on this thread.
 */
const char *ct_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ct_version(void);

/**
 * Number of causal factors tracked for `nodes` assets: `2 * nodes * (nodes - 1)`.
 */
size_t ct_state_dim(size_t nodes);

/**
 * Default `(q, r, p0)` noise settings.
 */
struct CtNoise ct_noise_default(void);

/**
 * Writes the CSV column name of factor `index` (nodes labelled `y1..yG`)
 * into `buf` as a NUL-terminated string.
 *
 * # Safety
 * `buf` must point to `buf_len` writable bytes.
 */
enum CtStatus ct_column_name(size_t nodes, size_t index, char *buf, size_t buf_len);

/**
 * Builds a series from `samples x channels` row-major values. `contiguous`
 * may be NULL (all samples contiguous) or hold one flag per sample;
 * flag 0 is ignored.
 *
 * # Safety
 * `values` must hold `samples * channels` doubles, `contiguous` (if not
 * NULL) `samples` bytes, and `out` must be writable.
 */
enum CtStatus ct_series_new(const double *values,
                            size_t samples,
                            size_t channels,
                            const uint8_t *contiguous,
                            struct CtSeries **out);

/**
 * Loads a series CSV (`timestamp,contiguous,<channels...>`).
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum CtStatus ct_series_load_csv(const char *path, struct CtSeries **out);

/**
 * Sample count, or 0 for NULL.
 *
 * # Safety
 * `series` must be NULL or a live handle.
 */
size_t ct_series_len(const struct CtSeries *series);

/**
 * Channel count, or 0 for NULL.
 *
 * # Safety
 * `series` must be NULL or a live handle.
 */
size_t ct_series_channels(const struct CtSeries *series);

/**
 * # Safety
 * `series` must be NULL or a handle not yet freed.
 */
void ct_series_free(struct CtSeries *series);

/**
 * Estimates the factor trajectory of `series`. `lag_depth` is used only
 * with [`CtMode::FixedLag`].
 *
 * # Safety
 * `series` must be a live handle and `out` writable.
 */
enum CtStatus ct_estimate(const struct CtSeries *series,
                          enum CtMode mode,
                          struct CtNoise noise,
                          size_t lag_depth,
                          struct CtTrajectory **out);

/**
 * Row count, or 0 for NULL.
 *
 * # Safety
 * `traj` must be NULL or a live handle.
 */
size_t ct_trajectory_rows(const struct CtTrajectory *traj);

/**
 * Factors per row, or 0 for NULL.
 *
 * # Safety
 * `traj` must be NULL or a live handle.
 */
size_t ct_trajectory_dim(const struct CtTrajectory *traj);

/**
 * Series sample index of each row, written into `buf` (`rows` entries).
 *
 * # Safety
 * `traj` must be a live handle and `buf` hold `buf_len` entries.
 */
enum CtStatus ct_trajectory_indices(const struct CtTrajectory *traj, size_t *buf, size_t buf_len);

/**
 * Copies the `rows x dim` posterior means, row-major.
 *
 * # Safety
 * `traj` must be a live handle and `buf` hold `buf_len` doubles.
 */
enum CtStatus ct_trajectory_means(const struct CtTrajectory *traj, double *buf, size_t buf_len);

/**
 * Copies the `rows x dim` posterior standard deviations, row-major.
 *
 * # Safety
 * `traj` must be a live handle and `buf` hold `buf_len` doubles.
 */
enum CtStatus ct_trajectory_std_devs(const struct CtTrajectory *traj, double *buf, size_t buf_len);

/**
 * # Safety
 * `traj` must be NULL or a handle not yet freed.
 */
void ct_trajectory_free(struct CtTrajectory *traj);

/**
 * Creates a streaming fixed-lag smoother for `nodes` assets.
 *
 * # Safety
 * `out` must be writable.
 */
enum CtStatus ct_fixed_lag_new(size_t nodes,
                               struct CtNoise noise,
                               size_t lag_depth,
                               struct CtFixedLag **out);

/**
 * Feeds one sample of `channels` values. When an estimate becomes due,
 * `*ready` is set to 1, `*index` to its sample index and `mean` receives
 * the `dim` factor means; otherwise `*ready` is 0.
 *
 * # Safety
 * `smoother` must be a live handle, `y` hold `channels` doubles, `mean`
 * hold `mean_len` doubles, and `index` and `ready` be writable.
 */
enum CtStatus ct_fixed_lag_push(struct CtFixedLag *smoother,
                                const double *y,
                                size_t channels,
                                uint8_t contiguous,
                                double *mean,
                                size_t mean_len,
                                size_t *index,
                                uint8_t *ready);

/**
 * Flushes the estimates still held in the window as a trajectory. The
 * smoother accepts no further samples afterwards.
 *
 * # Safety
 * `smoother` must be a live handle and `out` writable.
 */
enum CtStatus ct_fixed_lag_finish(struct CtFixedLag *smoother, struct CtTrajectory **out);

/**
 * # Safety
 * `smoother` must be NULL or a handle not yet freed.
 */
void ct_fixed_lag_free(struct CtFixedLag *smoother);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAUSAL_TWIN_H */
