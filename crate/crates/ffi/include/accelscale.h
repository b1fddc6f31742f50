#ifndef ACCELSCALE_H
#define ACCELSCALE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AsStatus {
  AS_STATUS_OK = 0,
  AS_STATUS_NULL_POINTER = 1,
  AS_STATUS_INVALID_UTF8 = 2,
  AS_STATUS_PARSE_ERROR = 3,
  AS_STATUS_INVALID_INPUT = 4,
  AS_STATUS_COMPUTE_ERROR = 5,
  AS_STATUS_BUFFER_TOO_SMALL = 6,
  AS_STATUS_PANIC = 7,
} AsStatus;

// Opaque model description.
typedef struct AsModel AsModel;

// Opaque hardware profile.
typedef struct AsProfile AsProfile;

// Whole-model cost under one profile.
typedef struct AsCostSummary {
  // Multiply-adds for the batch.
  double flops;
  double flops_per_image;
  double bytes;
  // Ops per byte.
  double intensity;
  double latency_s;
  double achieved_efficiency;
  // Share of latency spent in memory-bound stages.
  double memory_bound_share;
  uint32_t depth;
  uint32_t resolution;
} AsCostSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL terminated) and
// stores the full length, excluding the terminator, in `len`.
//
// # Safety
// `buf` must point to `cap` writable bytes or be null with `cap == 0`.
enum AsStatus as_last_error(char *buf, uintptr_t cap, uintptr_t *len);

// # Safety
// `name` must be a NUL-terminated string; `out` a valid pointer.
enum AsStatus as_profile_builtin(const char *name, struct AsProfile **out);

// # Safety
// `json` must be a NUL-terminated string; `out` a valid pointer.
enum AsStatus as_profile_from_json(const char *json, struct AsProfile **out);

// # Safety
// `p` must come from an `as_profile_*` constructor and not be used afterwards.
void as_profile_free(struct AsProfile *p);

// # Safety
// Pointers must be valid.
enum AsStatus as_profile_ridge_point(const struct AsProfile *p, double *out);

// Looks up a reference network: `b0`, `x-b0`, `x-b0-gpu`, `plus-space-to-depth`, ...
//
// # Safety
// `name` must be a NUL-terminated string; `out` a valid pointer.
enum AsStatus as_model_builtin(const char *name, struct AsModel **out);

// # Safety
// `json` must be a NUL-terminated string; `out` a valid pointer.
enum AsStatus as_model_from_json(const char *json, struct AsModel **out);

// # Safety
// `m` must come from an `as_model_*` constructor and not be used afterwards.
void as_model_free(struct AsModel *m);

// Writes the model JSON into `buf`; `len` receives the length without terminator.
//
// # Safety
// `buf` must point to `cap` writable bytes.
enum AsStatus as_model_to_json(const struct AsModel *m, char *buf, uintptr_t cap, uintptr_t *len);

// # Safety
// Pointers must be valid.
enum AsStatus as_model_flops_per_image(const struct AsModel *m, double *out);

// # Safety
// Pointers must be valid.
enum AsStatus as_model_cost(const struct AsModel *m,
                            const struct AsProfile *p,
                            uint32_t batch,
                            struct AsCostSummary *out);

// Compound-scaled copy of `m` with default rounding.
//
// # Safety
// Pointers must be valid.
enum AsStatus as_model_scale(const struct AsModel *m,
                             double alpha,
                             double beta,
                             double gamma,
                             double phi,
                             struct AsModel **out);

// Phi whose scaled model is closest to `target_latency_s` on `p`.
//
// # Safety
// Pointers must be valid.
enum AsStatus as_fit_phi(const struct AsModel *m,
                         const struct AsProfile *p,
                         double alpha,
                         double beta,
                         double gamma,
                         double target_latency_s,
                         double *out);

// `accuracy * (latency / target)^w`.
//
// # Safety
// `out` must be valid.
enum AsStatus as_reward(double accuracy,
                        double latency_s,
                        double target_latency_s,
                        double w,
                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACCELSCALE_H */
