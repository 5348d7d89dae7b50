#ifndef NOF_H
#define NOF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Protocol families.
 */
typedef enum {
  NOF_PROTOCOL_KIND_GIP = 0,
  NOF_PROTOCOL_KIND_DISJ = 1,
  NOF_PROTOCOL_KIND_MOD3 = 2,
} NofProtocolKind;

/**
 * Status codes returned by every entry point.
 */
typedef enum {
  NOF_STATUS_OK = 0,
  NOF_STATUS_NULL_POINTER = 1,
  NOF_STATUS_INVALID_ARGUMENT = 2,
  NOF_STATUS_INFEASIBLE = 3,
  NOF_STATUS_CAP_EXCEEDED = 4,
  NOF_STATUS_INTERNAL = 5,
} NofStatus;

/**
 * Opaque protocol handle.
 */
typedef struct NofProtocol NofProtocol;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *nof_last_error(void);

/**
 * Builds a protocol for `n x k` inputs with error at most `epsilon`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
NofStatus nof_protocol_new(NofProtocolKind kind,
                           size_t n,
                           size_t k,
                           double epsilon,
                           NofProtocol **out);

/**
 * Releases a handle from [`nof_protocol_new`]. Null is ignored.
 *
 * # Safety
 * `p` must be null or a handle not yet freed.
 */
void nof_protocol_free(NofProtocol *p);

/**
 * Worst-case number of bits written by any execution.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
NofStatus nof_protocol_cost_ceiling(const NofProtocol *p, size_t *out);

/**
 * Runs the protocol once on the row-major matrix `bits` with tape `seed`.
 *
 * # Safety
 * `p` must be a live handle, `bits` must hold `n * k` bytes of 0 or 1, and
 * `output` and `cost_bits` must be writable.
 */
NofStatus nof_protocol_run(const NofProtocol *p,
                           const uint8_t *bits,
                           size_t n,
                           size_t k,
                           uint64_t seed,
                           bool *output,
                           size_t *cost_bits);

/**
 * Exact failure probability over the tape on one input, as a double.
 *
 * # Safety
 * As for [`nof_protocol_run`]; `out` must be writable.
 */
NofStatus nof_protocol_exact_error(const NofProtocol *p,
                                   const uint8_t *bits,
                                   size_t n,
                                   size_t k,
                                   double *out);

/**
 * Monte Carlo estimate over uniform inputs. Writes the JSON report to
 * `*json`, which must be released with [`nof_string_free`].
 *
 * # Safety
 * `json` must be writable.
 */
NofStatus nof_simulate_uniform(NofProtocolKind kind,
                               size_t n,
                               size_t k,
                               double epsilon,
                               uint64_t trials,
                               uint64_t seed,
                               char **json);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void nof_string_free(char *s);

/**
 * Exact discrepancy of GIP under the uniform distribution over all
 * cylinder intersections, with enumeration cap `cap`.
 *
 * # Safety
 * `out` must be writable.
 */
NofStatus nof_disc_gip_uniform(size_t n, size_t k, uint64_t cap, double *out);

/**
 * Library version as a static nul-terminated string.
 */
const char *nof_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NOF_H */
