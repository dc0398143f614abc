#ifndef SKETCHOP_H
#define SKETCHOP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum SopStatus {
  SOP_STATUS_OK = 0,
  SOP_STATUS_NULL_ARGUMENT = 1,
  SOP_STATUS_INVALID_UTF8 = 2,
  SOP_STATUS_INVALID_ARGUMENT = 3,
  SOP_STATUS_IO = 4,
  SOP_STATUS_BAD_SKETCH = 5,
  SOP_STATUS_INTERNAL = 6,
} SopStatus;

/**
 * Session phase as reported by [`sop_session_phase`].
 */
typedef enum SopPhase {
  SOP_PHASE_IDLE = 0,
  SOP_PHASE_AWAITING_SKETCH = 1,
  SOP_PHASE_INTERPRETING = 2,
  SOP_PHASE_AWAITING_CONFIRM = 3,
  SOP_PHASE_EXECUTING = 4,
  SOP_PHASE_AWAITING_FEEDBACK = 5,
  SOP_PHASE_DONE = 6,
  SOP_PHASE_FAILED = 7,
} SopPhase;

/**
 * A shape classifier with fixed thresholds.
 */
typedef struct SopClassifier SopClassifier;

/**
 * One teleoperation session over a simulated scene.
 */
typedef struct SopSession SopSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string. Do not free.
 */
const char *sop_version(void);

/**
 * Copies the calling thread's last error message into `buf`, truncating to
 * `len - 1` bytes plus NUL. Returns the full message length without the NUL,
 * or 0 when the last call succeeded. `buf` may be NULL to query the length.
 *
 * # Safety
 * `buf` must be NULL or point to `len` writable bytes.
 */
size_t sop_last_error(char *buf, size_t len);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void sop_string_free(char *s);

/**
 * Loads a scene file and opens a session on it. `config_json` may be NULL
 * for defaults; otherwise it is a service configuration object.
 *
 * # Safety
 * String arguments must be NULL or NUL-terminated; `out` must be writable.
 */
enum SopStatus sop_session_new(const char *scene_path,
                               const char *config_json,
                               struct SopSession **out);

/**
 * # Safety
 * `s` must be NULL or a live session handle.
 */
void sop_session_free(struct SopSession *s);

/**
 * Starts the session. `frames_json` receives a JSON array of the frames
 * to send to the client.
 *
 * # Safety
 * `s` must be a live session handle and `frames_json` writable.
 */
enum SopStatus sop_session_connect(struct SopSession *s, char **frames_json);

/**
 * Handles one client frame given as protocol JSON text. Malformed or
 * out-of-phase frames are answered with error frames, not a failing status.
 *
 * # Safety
 * `s` must be a live session handle, `frame` NUL-terminated and
 * `frames_json` writable.
 */
enum SopStatus sop_session_handle(struct SopSession *s, const char *frame, char **frames_json);

/**
 * Runs pending interpretation work.
 *
 * # Safety
 * `s` must be a live session handle and `frames_json` writable.
 */
enum SopStatus sop_session_run_jobs(struct SopSession *s, char **frames_json);

/**
 * Advances the simulation by one control tick.
 *
 * # Safety
 * `s` must be a live session handle and `frames_json` writable.
 */
enum SopStatus sop_session_tick(struct SopSession *s, char **frames_json);

/**
 * Ends the session; later frames are rejected.
 *
 * # Safety
 * `s` must be a live session handle and `frames_json` writable.
 */
enum SopStatus sop_session_close(struct SopSession *s, char **frames_json);

/**
 * # Safety
 * `s` must be a live session handle and `phase` writable.
 */
enum SopStatus sop_session_phase(const struct SopSession *s, enum SopPhase *phase);

/**
 * Creates a classifier. `config_json` may be NULL for default thresholds.
 *
 * # Safety
 * `config_json` must be NULL or NUL-terminated; `out` must be writable.
 */
enum SopStatus sop_classifier_new(const char *config_json, struct SopClassifier **out);

/**
 * # Safety
 * `c` must be NULL or a live classifier handle.
 */
void sop_classifier_free(struct SopClassifier *c);

/**
 * Classifies a sketch given as the `sketch_submit` payload JSON.
 * `classification_json` receives `{"shape": ..., "params": {...}}`.
 *
 * # Safety
 * `c` must be a live classifier, `sketch_json` NUL-terminated and
 * `classification_json` writable.
 */
enum SopStatus sop_classify(const struct SopClassifier *c,
                            const char *sketch_json,
                            char **classification_json);

/**
 * Runs a headless scenario file with default planner settings and returns
 * the evaluation report as JSON.
 *
 * # Safety
 * `scenarios_path` must be NUL-terminated and `report_json` writable.
 */
enum SopStatus sop_run_headless(const char *scenarios_path, char **report_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKETCHOP_H */
