/* C interface for the raptor-threshold library. */

#ifndef RAPTOR_THRESHOLD_H
#define RAPTOR_THRESHOLD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call in this interface.
 */
typedef enum RtStatus {
  /**
   * The call succeeded and all out-pointers are populated.
   */
  RT_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  RT_STATUS_NULL_ARGUMENT = 1,
  /**
   * A parameter was out of range or otherwise unusable.
   */
  RT_STATUS_INVALID_PARAMETER = 2,
  /**
   * The requested threshold cannot be met at these sizing parameters.
   */
  RT_STATUS_INFEASIBLE_THRESHOLD = 3,
  /**
   * Fragments from different keys were combined.
   */
  RT_STATUS_MIXED_KEY_ID = 4,
  /**
   * The pooled fragments do not determine the key.
   */
  RT_STATUS_UNDECODABLE = 5,
  /**
   * Input bytes failed to parse or validate.
   */
  RT_STATUS_MALFORMED_INPUT = 6,
  /**
   * An internal invariant failed; file a bug.
   */
  RT_STATUS_INTERNAL = 7,
} RtStatus;

/**
 * One member's fragment. Opaque; see `rt_fragment_decode`.
 */
typedef struct RtFragment RtFragment;

/**
 * All fragments from one split, indexed by member id. Opaque.
 */
typedef struct RtFragmentSet RtFragmentSet;

/**
 * Sizing plan for one key split. Opaque; see `rt_plan_new`.
 */
typedef struct RtPlan RtPlan;

/**
 * Bytes allocated by this library. Release with `rt_buffer_free`.
 */
typedef struct RtBuffer {
  uint8_t *data;
  size_t len;
} RtBuffer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the error text from the calling thread's last failed call, or
 * null if nothing failed yet. The pointer stays valid until this thread's
 * next failing call; do not free it.
 */
const char *rt_last_error_message(void);

/**
 * Frees a buffer returned by this library. Null is ignored.
 *
 * # Safety
 * `buffer` must be a pointer previously returned through an `RtBuffer`
 * out-parameter of this library, not yet freed.
 */
void rt_buffer_free(struct RtBuffer *buffer);

/**
 * Computes the largest feasible threshold for a pair of exact decimal
 * overheads, for example "1.1" and "0.99".
 *
 * # Safety
 * `overhead_hi` and `overhead_lo` must be NUL-terminated strings; `out`
 * must be writable.
 */
enum RtStatus rt_max_threshold(const char *overhead_hi, const char *overhead_lo, uint64_t *out);

/**
 * Plans an s-of-n split for a key of `key_len` bytes cut into symbols of
 * `symbol_size` bytes, using the default overheads (1.1, 0.99) and robust
 * soliton parameters (0.03, 0.5).
 *
 * # Safety
 * `out` must be writable. The returned plan must be released with
 * `rt_plan_free`.
 */
enum RtStatus rt_plan_new(uint32_t n,
                          uint16_t s,
                          size_t key_len,
                          uint32_t symbol_size,
                          struct RtPlan **out);

/**
 * `rt_plan_new` with every knob exposed: exact decimal overhead strings
 * and robust soliton parameters.
 *
 * # Safety
 * As `rt_plan_new`; the overhead strings must be NUL-terminated.
 */
enum RtStatus rt_plan_new_with_options(uint32_t n,
                                       uint16_t s,
                                       size_t key_len,
                                       uint32_t symbol_size,
                                       const char *overhead_hi,
                                       const char *overhead_lo,
                                       double c,
                                       double delta,
                                       struct RtPlan **out);

/**
 * # Safety
 * `plan` must come from `rt_plan_new*` and not be freed twice.
 */
void rt_plan_free(struct RtPlan *plan);

/**
 * Reads the plan's sizing: group size n, threshold s, input symbols k,
 * symbols per fragment f, symbol size in bytes, and the largest key the
 * plan can carry. Any out-pointer may be null to skip that field.
 *
 * # Safety
 * `plan` must be a live plan handle; non-null out-pointers must be
 * writable.
 */
enum RtStatus rt_plan_dimensions(const struct RtPlan *plan,
                                 uint32_t *out_n,
                                 uint16_t *out_s,
                                 uint32_t *out_k,
                                 uint32_t *out_f,
                                 uint32_t *out_symbol_size,
                                 size_t *out_max_key_len);

/**
 * Splits a key into the plan's n fragments. `key_id` must point to 16
 * bytes naming the key, or be null to draw a random id from the OS.
 *
 * # Safety
 * `key` must point to `key_len` readable bytes; `key_id` must be null or
 * point to 16 readable bytes; `out` must be writable. The returned set
 * must be released with `rt_fragment_set_free`.
 */
enum RtStatus rt_split(const struct RtPlan *plan,
                       const uint8_t *key,
                       size_t key_len,
                       const uint8_t *key_id,
                       struct RtFragmentSet **out);

/**
 * # Safety
 * `set` must come from `rt_split` and not be freed twice.
 */
void rt_fragment_set_free(struct RtFragmentSet *set);

/**
 * Number of fragments in the set; zero when `set` is null.
 *
 * # Safety
 * `set` must be null or a live fragment-set handle.
 */
size_t rt_fragment_set_len(const struct RtFragmentSet *set);

/**
 * Serializes fragment `index` of the set to its binary wire form.
 *
 * # Safety
 * `set` must be a live fragment-set handle; `out` must be writable.
 */
enum RtStatus rt_fragment_set_encode(const struct RtFragmentSet *set,
                                     size_t index,
                                     struct RtBuffer **out);

/**
 * Parses and validates one fragment from its binary wire form.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `out` must be writable. The
 * returned fragment must be released with `rt_fragment_free`.
 */
enum RtStatus rt_fragment_decode(const uint8_t *data, size_t len, struct RtFragment **out);

/**
 * # Safety
 * `fragment` must come from `rt_fragment_decode` and not be freed twice.
 */
void rt_fragment_free(struct RtFragment *fragment);

/**
 * Reads a fragment's member id and 16-byte key id. Either out-pointer may
 * be null to skip that field.
 *
 * # Safety
 * `fragment` must be a live fragment handle; a non-null `out_key_id` must
 * point to 16 writable bytes.
 */
enum RtStatus rt_fragment_info(const struct RtFragment *fragment,
                               uint32_t *out_member_id,
                               uint8_t *out_key_id);

/**
 * Pools fragments and recovers the key. Success requires any s of the
 * original n fragments; fewer, or an unlucky non-threshold subset, returns
 * `RT_STATUS_UNDECODABLE`.
 *
 * # Safety
 * `fragments` must point to `count` live fragment handles; `out_key` must
 * be writable.
 */
enum RtStatus rt_combine(const struct RtFragment *const *fragments,
                         size_t count,
                         struct RtBuffer **out_key);

/**
 * Commits to a subset of the universe `1..=universe_size`. `chosen` lists
 * the selected indices (null allowed when `chosen_len` is zero). Writes
 * two UTF-8 documents: the shareable commitment list and the reveal list
 * that must stay private until opening time. The same `base_seed`
 * reproduces the same documents.
 *
 * # Safety
 * `chosen` must point to `chosen_len` readable values or be null when
 * empty; both out-pointers must be writable.
 */
enum RtStatus rt_commit_selection(uint64_t universe_size,
                                  const uint64_t *chosen,
                                  size_t chosen_len,
                                  uint32_t prime_bits,
                                  uint64_t base_seed,
                                  struct RtBuffer **out_commitments,
                                  struct RtBuffer **out_reveals);

/**
 * Verifies a reveal document against a commitment document and reports
 * how many objects came out Selected, NotSelected, and Invalid. Any
 * out-pointer may be null to skip that count.
 *
 * # Safety
 * The two documents must point to readable UTF-8 bytes of the given
 * lengths; non-null out-pointers must be writable.
 */
enum RtStatus rt_verify_selection(const uint8_t *commitments,
                                  size_t commitments_len,
                                  const uint8_t *reveals,
                                  size_t reveals_len,
                                  uint64_t *out_selected,
                                  uint64_t *out_not_selected,
                                  uint64_t *out_invalid);

/**
 * Generates a receipt keypair with a modulus of exactly `modulus_bits`
 * bits (512 minimum) using OS entropy, serialized as a UTF-8 document
 * containing the private exponent. Keep it secret.
 *
 * # Safety
 * `out_keypair` must be writable.
 */
enum RtStatus rt_receipt_keygen(uint32_t modulus_bits, struct RtBuffer **out_keypair);

/**
 * Signs a file with a keypair document from `rt_receipt_keygen` and
 * writes the receipt document.
 *
 * # Safety
 * `keypair` and `file` must point to readable bytes of the given lengths;
 * `out_receipt` must be writable.
 */
enum RtStatus rt_receipt_sign(const uint8_t *keypair,
                              size_t keypair_len,
                              const uint8_t *file,
                              size_t file_len,
                              struct RtBuffer **out_receipt);

/**
 * Checks a receipt document against a file. `out_ok` reports the verdict;
 * the status is `RT_STATUS_OK` whenever the receipt parsed, whatever the
 * verdict.
 *
 * # Safety
 * `receipt` and `file` must point to readable bytes of the given lengths;
 * `out_ok` must be writable.
 */
enum RtStatus rt_receipt_verify(const uint8_t *receipt,
                                size_t receipt_len,
                                const uint8_t *file,
                                size_t file_len,
                                bool *out_ok);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RAPTOR_THRESHOLD_H */
