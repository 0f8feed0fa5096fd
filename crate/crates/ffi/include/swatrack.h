#ifndef SWATRACK_H
#define SWATRACK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum SwtStatus {
  SWT_STATUS_OK = 0,
  SWT_STATUS_NULL_POINTER = 1,
  SWT_STATUS_INVALID_ARGUMENT = 2,
  SWT_STATUS_CONFIG = 3,
  SWT_STATUS_INITIALIZATION = 4,
  SWT_STATUS_IO = 5,
  SWT_STATUS_PARSE = 6,
  SWT_STATUS_EVALUATION = 7,
  SWT_STATUS_UNDEFINED_METRIC = 8,
  SWT_STATUS_PANIC = 9,
} SwtStatus;

/**
 * An RGB image.
 */
typedef struct SwtFrame SwtFrame;

/**
 * A single-target tracker.
 */
typedef struct SwtTracker SwtTracker;

/**
 * The tunable subset of the tracker configuration. Fill it with
 * [`swt_tracker_config_default`] and override fields as needed.
 */
typedef struct SwtTrackerConfig {
  size_t particles;
  size_t k_init;
  size_t k_min;
  size_t k_max;
  double omega0;
  double c10;
  double c20;
  double ef0;
  double t_minf;
  uint64_t seed;
  /**
   * Zero runs plain PSO with EF fixed at 1.
   */
  bool adaptive;
} SwtTrackerConfig;

/**
 * Axis-aligned box; `(x, y)` is the top-left corner.
 */
typedef struct SwtBox {
  double x;
  double y;
  double w;
  double h;
} SwtBox;

/**
 * One frame's estimate.
 */
typedef struct SwtRecord {
  size_t frame_index;
  struct SwtBox bbox;
  double fitness;
  size_t iterations_used;
  size_t evaluations;
  bool lost;
} SwtRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *swt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *swt_version(void);

/**
 * Creates a frame from `width * height` packed RGB triples (row-major,
 * `3 * width * height` bytes).
 *
 * # Safety
 * `rgb` must point to `len` readable bytes and `out` to writable storage.
 */
enum SwtStatus swt_frame_new(size_t width,
                             size_t height,
                             const uint8_t *rgb,
                             size_t len,
                             struct SwtFrame **out_frame);

/**
 * Reads a binary PPM (P6) file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out_frame` writable.
 */
enum SwtStatus swt_frame_load_ppm(const char *path, struct SwtFrame **out_frame);

/**
 * Releases a frame. Null is ignored.
 *
 * # Safety
 * `frame` must come from this library and not be used afterwards.
 */
void swt_frame_free(struct SwtFrame *frame);

/**
 * Width in pixels, or 0 for null.
 *
 * # Safety
 * `frame` must be null or a live frame handle.
 */
size_t swt_frame_width(const struct SwtFrame *frame);

/**
 * Height in pixels, or 0 for null.
 *
 * # Safety
 * `frame` must be null or a live frame handle.
 */
size_t swt_frame_height(const struct SwtFrame *frame);

/**
 * Writes the default configuration into `out_config`.
 *
 * # Safety
 * `out_config` must be writable.
 */
enum SwtStatus swt_tracker_config_default(struct SwtTrackerConfig *out_config);

/**
 * Creates a tracker from the target's box in its first frame. A null
 * `config` means defaults.
 *
 * # Safety
 * Pointers must be null (where allowed) or valid; `out_tracker` writable.
 */
enum SwtStatus swt_tracker_new(const struct SwtTrackerConfig *config,
                               const struct SwtFrame *first_frame,
                               struct SwtBox initial_box,
                               struct SwtTracker **out_tracker);

/**
 * Estimates the target in the next frame.
 *
 * # Safety
 * `tracker` and `frame` must be live handles; `out_record` writable.
 */
enum SwtStatus swt_tracker_step(struct SwtTracker *tracker,
                                const struct SwtFrame *frame,
                                struct SwtRecord *out_record);

/**
 * Releases a tracker. Null is ignored.
 *
 * # Safety
 * `tracker` must come from this library and not be used afterwards.
 */
void swt_tracker_free(struct SwtTracker *tracker);

/**
 * Harmonic mean of recall and precision of `estimate` against `truth`.
 *
 * # Safety
 * `out_value` must be writable.
 */
enum SwtStatus swt_f_measure(struct SwtBox truth, struct SwtBox estimate, double *out_value);

/**
 * Bhattacharyya coefficient between the colour histograms under two boxes.
 * Yields 0 when either box covers no pixels.
 *
 * # Safety
 * Frame handles must be live; `out_value` writable.
 */
enum SwtStatus swt_similarity(const struct SwtFrame *frame_a,
                              struct SwtBox box_a,
                              const struct SwtFrame *frame_b,
                              struct SwtBox box_b,
                              double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SWATRACK_H */
