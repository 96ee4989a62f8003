#ifndef SKBREAK_H
#define SKBREAK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SkbStatus {
  SKB_STATUS_OK = 0,
  SKB_STATUS_NULL_POINTER = 1,
  SKB_STATUS_INVALID_ARGUMENT = 2,
  SKB_STATUS_NUMERICAL = 3,
  SKB_STATUS_PANIC = 4,
  SKB_STATUS_BUFFER_TOO_SMALL = 5,
} SkbStatus;

typedef enum SkbVerifyStatus {
  SKB_VERIFY_STATUS_PASS = 0,
  SKB_VERIFY_STATUS_FAIL = 1,
  SKB_VERIFY_STATUS_NUMERICAL_FAILURE = 2,
} SkbVerifyStatus;

typedef enum SkbKind {
  SKB_KIND_ODD = 0,
  SKB_KIND_EVEN_MINUS = 1,
  SKB_KIND_EVEN_PLUS = 2,
  SKB_KIND_PERTURBED_ODD = 3,
  SKB_KIND_PERTURBED_EVEN = 4,
} SkbKind;

/**
 * Opaque family handle.
 */
typedef struct SkbFamily SkbFamily;

/**
 * Opaque verification report handle.
 */
typedef struct SkbReport SkbReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Length in bytes (without the terminator) of the last error message on this
 * thread, or 0 if there is none.
 */
size_t skb_last_error_length(void);

/**
 * Copies the last error message (NUL-terminated) into `buf`.
 *
 * # Safety
 * `buf` must be valid for `len` bytes of writes.
 */
enum SkbStatus skb_last_error_message(char *buf, size_t len);

void skb_clear_last_error(void);

/**
 * Static NUL-terminated version string.
 */
const char *skb_version(void);

/**
 * Creates a family of the given `SkbKind`. `eta` is ignored for the unperturbed kinds; `eta0 <= 0`
 * means no localization (perturbed-odd) or the default 4 eta (perturbed-even).
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum SkbStatus skb_family_new(size_t k,
                              int32_t kind,
                              double eta,
                              double eta0,
                              struct SkbFamily **out);

/**
 * # Safety
 * `family` must be null or a handle from `skb_family_new` not yet freed.
 */
void skb_family_free(struct SkbFamily *family);

/**
 * Dimension k of the family, 0 for a null handle.
 *
 * # Safety
 * `family` must be null or a live handle.
 */
size_t skb_family_k(const struct SkbFamily *family);

/**
 * Writes F(x, lambda) into `out` (k entries).
 *
 * # Safety
 * `x` must hold `len` readable doubles and `out` `len` writable ones.
 */
enum SkbStatus skb_family_eval(const struct SkbFamily *family,
                               const double *x,
                               size_t len,
                               double lambda,
                               double *out);

/**
 * Number of negative eigenvalues of DF on H_{k-1}; errors if non-hyperbolic.
 *
 * # Safety
 * `x` must hold `len` readable doubles; `out` must be writable.
 */
enum SkbStatus skb_family_index(const struct SkbFamily *family,
                                const double *x,
                                size_t len,
                                double lambda,
                                size_t *out);

/**
 * Signed equilibrium count sum (-1)^index at `lambda`.
 *
 * # Safety
 * `out` must be writable.
 */
enum SkbStatus skb_poincare_hopf(const struct SkbFamily *family, double lambda, int64_t *out);

/**
 * Predicted crossing-curve and fold counts.
 *
 * # Safety
 * Both out pointers must be writable.
 */
enum SkbStatus skb_predicted_counts(size_t k, uint64_t *crossings, uint64_t *folds);

/**
 * Closed-form fold value gamma_{k,p}.
 *
 * # Safety
 * `out` must be writable.
 */
enum SkbStatus skb_gamma(size_t k, size_t p, double eta, double *out);

/**
 * Runs the crossing-curve and fold verification over the default window.
 * Count mismatches are reported in the handle, not as an error status.
 *
 * # Safety
 * `out` must be valid for writing a handle.
 */
enum SkbStatus skb_verify(size_t k, double eta, double eta0, struct SkbReport **out);

/**
 * # Safety
 * `report` must be null or a handle from `skb_verify` not yet freed.
 */
void skb_report_free(struct SkbReport *report);

/**
 * # Safety
 * `report` must be a live handle; the out pointers must be writable.
 */
enum SkbStatus skb_report_counts(const struct SkbReport *report,
                                 uint64_t *crossings,
                                 uint64_t *folds);

/**
 * # Safety
 * `report` must be a live handle.
 */
enum SkbVerifyStatus skb_report_status(const struct SkbReport *report);

/**
 * The full report as JSON; free with `skb_string_free`. Null on failure.
 *
 * # Safety
 * `report` must be a live handle.
 */
char *skb_report_json(const struct SkbReport *report);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void skb_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKBREAK_H */
