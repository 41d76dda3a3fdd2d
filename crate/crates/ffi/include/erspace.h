/*
Copyright 2026 The erspace Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/


#ifndef ERSPACE_H
#define ERSPACE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ErStatus {
  ER_STATUS_OK = 0,
  ER_STATUS_NULL_POINTER = 1,
  ER_STATUS_INVALID_ARGUMENT = 2,
  ER_STATUS_PARSE_ERROR = 3,
  ER_STATUS_DIMENSION_MISMATCH = 4,
  ER_STATUS_NOT_SRS = 5,
  ER_STATUS_UNREACHABLE = 6,
  ER_STATUS_BUFFER_TOO_SMALL = 7,
  ER_STATUS_PANIC = 8,
} ErStatus;

typedef enum ErSpace {
  ER_SPACE_JOINT = 0,
  ER_SPACE_TASK = 1,
  ER_SPACE_ERA = 2,
  ER_SPACE_ERJ = 3,
} ErSpace;

typedef enum ErMode {
  ER_MODE_ABSOLUTE = 0,
  ER_MODE_DELTA = 1,
} ErMode;

/**
 * Why a translation produced no joint target.
 */
typedef enum ErFailure {
  ER_FAILURE_NONE = 0,
  ER_FAILURE_MALFORMED = 1,
  ER_FAILURE_IK_NO_SOLUTION = 2,
  ER_FAILURE_LIMIT_VIOLATION = 3,
  ER_FAILURE_UNREACHABLE = 4,
} ErFailure;

/**
 * Opaque kinematic chain.
 */
typedef struct ErChain ErChain;

typedef struct ErElbowCircle {
  double center[3];
  double radius;
  double tangent[3];
  double bitangent[3];
  double axis[3];
} ErElbowCircle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *er_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *er_version(void);

/**
 * Parse a chain description (JSON). Free the handle with `er_chain_free`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum ErStatus er_chain_from_json(const char *json, struct ErChain **out);

/**
 * Shipped chain by name (`srs7`, `srs8plus`) or chain file path.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum ErStatus er_chain_load(const char *name, struct ErChain **out);

/**
 * # Safety
 * `chain` must come from this library and not be freed twice. Null is ignored.
 */
void er_chain_free(struct ErChain *chain);

/**
 * Number of joints, or 0 for a null handle.
 *
 * # Safety
 * `chain` must be null or a live handle.
 */
size_t er_chain_dof(const struct ErChain *chain);

/**
 * End-effector pose for `q` into `out_pose[7]`.
 *
 * # Safety
 * `q` holds `n` doubles; `out_pose` has room for 7.
 */
enum ErStatus er_forward_kinematics(const struct ErChain *chain,
                                    const double *q,
                                    size_t n,
                                    double *out_pose);

/**
 * End-effector geometric Jacobian, row-major 6 x n (linear rows first).
 *
 * # Safety
 * `q` holds `n` doubles; `out` has room for `out_len` doubles.
 */
enum ErStatus er_jacobian(const struct ErChain *chain,
                          const double *q,
                          size_t n,
                          double *out,
                          size_t out_len);

/**
 * Elbow self-motion circle for an end-effector pose (S-R-S chains only).
 *
 * # Safety
 * `pose` holds 7 doubles; `out` must be writable.
 */
enum ErStatus er_elbow_circle(const struct ErChain *chain,
                              const double *pose,
                              struct ErElbowCircle *out);

/**
 * Arm angle of configuration `q` in (-pi, pi].
 *
 * # Safety
 * `q` holds `n` doubles; `out_phi` must be writable.
 */
enum ErStatus er_arm_angle(const struct ErChain *chain, const double *q, size_t n, double *out_phi);

/**
 * Translate one action into a joint target with default solver parameters.
 *
 * `values` carries the joint values (joint space), the arm angles (ERA) or
 * the selected joint values (ERJ); `pose` is ignored in joint space. A null
 * `selection` with `selection_len == 0` selects the default base joints.
 * Returns `Ok` whenever the inputs were well formed; `out_failure` then says
 * whether `out_q` (n doubles) was written.
 *
 * # Safety
 * Every pointer must be valid for its stated length.
 */
enum ErStatus er_translate(const struct ErChain *chain,
                           enum ErSpace space,
                           enum ErMode mode,
                           const double *pose,
                           const double *values,
                           size_t values_len,
                           const double *current_q,
                           size_t n,
                           const size_t *selection,
                           size_t selection_len,
                           double *out_q,
                           enum ErFailure *out_failure);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ERSPACE_H */
