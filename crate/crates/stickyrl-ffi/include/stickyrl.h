#ifndef STICKYRL_H
#define STICKYRL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SrlStatus {
  SRL_STATUS_OK = 0,
  SRL_STATUS_NULL_POINTER = 1,
  SRL_STATUS_INVALID_ARGUMENT = 2,
  SRL_STATUS_INVALID_ACTION = 3,
  SRL_STATUS_STEP_AFTER_TERMINAL = 4,
  SRL_STATUS_BUFFER_TOO_SMALL = 5,
  SRL_STATUS_DEGENERATE = 6,
  SRL_STATUS_PANIC = 7,
} SrlStatus;

// Opaque environment handle.
typedef struct SrlEnv SrlEnv;

// Outcome of one decision.
typedef struct SrlStep {
  double reward;
  int64_t score_delta;
  uint32_t frames_consumed;
  // -1 when the game has no lives counter.
  int32_t lives;
  bool terminal;
} SrlStep;

typedef struct SrlWelch {
  double t;
  double df;
  double p;
} SrlWelch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *srl_version(void);

// Message for the most recent failure on this thread. Valid until the next
// call on this thread.
const char *srl_last_error(void);

// Create an environment from a "name:mode:difficulty" string.
//
// # Safety
// `spec` must be a NUL-terminated string and `out` a writable pointer.
enum SrlStatus srl_env_new(const char *spec, struct SrlEnv **out);

// Wrap the environment with sticky actions: each frame repeats the previous
// executed action with probability `varsigma`, and each decision lasts
// `frame_skip` frames.
//
// # Safety
// `env` must be a live handle.
enum SrlStatus srl_env_wrap_sticky(struct SrlEnv *env,
                                   double varsigma,
                                   uint32_t frame_skip,
                                   uint64_t seed);

// # Safety
// `env` must be a live handle and `out` writable.
enum SrlStatus srl_env_action_count(const struct SrlEnv *env, size_t *out);

// # Safety
// `env` must be a live handle and `out` writable.
enum SrlStatus srl_env_observation_len(const struct SrlEnv *env, size_t *out);

// Start a new episode.
//
// # Safety
// `env` must be a live handle.
enum SrlStatus srl_env_reset(struct SrlEnv *env);

// Take one decision.
//
// # Safety
// `env` must be a live handle and `out` writable.
enum SrlStatus srl_env_step(struct SrlEnv *env, size_t action, struct SrlStep *out);

// Copy the latest observation payload into `buf`. `len` receives the
// payload length even when `cap` is too small.
//
// # Safety
// `env` must be a live handle, `buf` valid for `cap` writes and `len`
// writable.
enum SrlStatus srl_env_observation(const struct SrlEnv *env, int32_t *buf, size_t cap, size_t *len);

// Release a handle. Null is accepted.
//
// # Safety
// `env` must come from `srl_env_new` and not be used afterwards.
void srl_env_free(struct SrlEnv *env);

// Welch's unequal-variance t-test with a two-sided p-value.
//
// # Safety
// `a` and `b` must be valid for `na` and `nb` reads, and `out` writable.
enum SrlStatus srl_welch(const double *a,
                         size_t na,
                         const double *b,
                         size_t nb,
                         struct SrlWelch *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STICKYRL_H */
