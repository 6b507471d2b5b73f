#ifndef CLINOTE_H
#define CLINOTE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ClinoteStatus {
  CLINOTE_STATUS_OK = 0,
  // A required pointer argument was NULL.
  CLINOTE_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  CLINOTE_STATUS_INVALID_UTF8 = 2,
  // Bad shapes, sizes or parameter values.
  CLINOTE_STATUS_INVALID_ARGUMENT = 3,
  // The inputs were well-formed but could not be processed.
  CLINOTE_STATUS_DATA_ERROR = 4,
  // A handle or buffer holds inconsistent data.
  CLINOTE_STATUS_CORRUPT = 5,
  // An output buffer is smaller than required.
  CLINOTE_STATUS_BUFFER_TOO_SMALL = 6,
  // Internal panic caught at the boundary.
  CLINOTE_STATUS_PANIC = 7,
} ClinoteStatus;

typedef enum ClinoteQuantScheme {
  CLINOTE_QUANT_SCHEME_ABSMAX4 = 0,
  CLINOTE_QUANT_SCHEME_NF4 = 1,
} ClinoteQuantScheme;

// Opaque low-rank adapter.
typedef struct ClinoteLora ClinoteLora;

// Opaque 4-bit quantized tensor.
typedef struct ClinoteQuantized ClinoteQuantized;

// Precision, recall and F1 of a ROUGE or BERTScore comparison.
typedef struct ClinoteScore {
  double precision;
  double recall;
  double f1;
} ClinoteScore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the most recent failure on this thread, or NULL if none.
// The pointer stays valid until the next failing call on the same thread.
const char *clinote_last_error(void);

// Library version as a static NUL-terminated string.
const char *clinote_version(void);

// Normalizes `text` (NFC, lowercase, restricted punctuation, collapsed
// whitespace). Returns NULL on failure; free the result with
// [`clinote_string_free`].
//
// # Safety
// `text` must be NULL or a valid NUL-terminated string.
char *clinote_normalize_text(const char *text);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must be NULL or a pointer obtained from this library that has not
// been freed yet.
void clinote_string_free(char *s);

// ROUGE-N F1/precision/recall between two texts, tokenized as normalized
// whitespace-separated words.
//
// # Safety
// `candidate` and `reference` must be valid NUL-terminated strings and
// `out` a valid pointer.
enum ClinoteStatus clinote_rouge_n(const char *candidate,
                                   const char *reference,
                                   size_t n,
                                   struct ClinoteScore *out);

// Summary-level ROUGE-L between two texts; sentences end at newlines and
// at `.`, `?` or `!` followed by whitespace.
//
// # Safety
// As for [`clinote_rouge_n`].
enum ClinoteStatus clinote_rouge_lsum(const char *candidate,
                                      const char *reference,
                                      struct ClinoteScore *out);

// Unweighted BERTScore by greedy cosine matching. `candidate` holds
// `candidate_len` row-major vectors of length `dim`, likewise `reference`.
//
// # Safety
// The arrays must hold `len * dim` doubles each; `out` must be valid.
enum ClinoteStatus clinote_bert_score(const double *candidate,
                                      size_t candidate_len,
                                      const double *reference,
                                      size_t reference_len,
                                      size_t dim,
                                      struct ClinoteScore *out);

// Quantizes `len` values in blocks of `block_size`.
//
// # Safety
// `values` must point to `len` doubles; `out` must be valid. On success
// `*out` receives a handle to release with [`clinote_quantized_free`].
enum ClinoteStatus clinote_quantize(const double *values,
                                    size_t len,
                                    size_t block_size,
                                    enum ClinoteQuantScheme scheme,
                                    struct ClinoteQuantized **out);

// Number of quantized values, 0 for NULL.
//
// # Safety
// `q` must be NULL or a live handle.
size_t clinote_quantized_len(const struct ClinoteQuantized *q);

// Number of blocks (and scales), 0 for NULL.
//
// # Safety
// `q` must be NULL or a live handle.
size_t clinote_quantized_num_blocks(const struct ClinoteQuantized *q);

// Copies the codes into `out`, which must have room for
// [`clinote_quantized_len`] entries.
//
// # Safety
// `q` must be a live handle and `out` point to `capacity` bytes.
enum ClinoteStatus clinote_quantized_codes(const struct ClinoteQuantized *q,
                                           int8_t *out,
                                           size_t capacity);

// Copies the stored per-block scales into `out` (`absmax / 7` for absmax4,
// `absmax` for nf4).
//
// # Safety
// `q` must be a live handle and `out` point to `capacity` doubles.
enum ClinoteStatus clinote_quantized_scales(const struct ClinoteQuantized *q,
                                            double *out,
                                            size_t capacity);

// Reconstructs the values into `out`.
//
// # Safety
// `q` must be a live handle and `out` point to `capacity` doubles.
enum ClinoteStatus clinote_dequantize(const struct ClinoteQuantized *q,
                                      double *out,
                                      size_t capacity);

// Releases a quantized tensor. NULL is ignored.
//
// # Safety
// `q` must be NULL or a handle not yet freed.
void clinote_quantized_free(struct ClinoteQuantized *q);

// Fresh rank-`r` adapter for a `d × k` matrix: `A` seeded uniform, `B = 0`.
//
// # Safety
// `out` must be valid; on success release `*out` with
// [`clinote_lora_free`].
enum ClinoteStatus clinote_lora_init(size_t d,
                                     size_t k,
                                     size_t r,
                                     double alpha,
                                     uint64_t seed,
                                     struct ClinoteLora **out);

// Adapter from explicit factors: `a` is `r × k`, `b` is `d × r`.
//
// # Safety
// `a` and `b` must hold `r * k` and `d * r` doubles; `out` must be valid.
enum ClinoteStatus clinote_lora_from_parts(const double *a,
                                           const double *b,
                                           size_t d,
                                           size_t k,
                                           size_t r,
                                           double alpha,
                                           struct ClinoteLora **out);

// Writes `d`, `k` and rank through the given pointers (any may be NULL).
//
// # Safety
// `lora` must be a live handle; non-NULL out-pointers must be valid.
enum ClinoteStatus clinote_lora_shape(const struct ClinoteLora *lora,
                                      size_t *d,
                                      size_t *k,
                                      size_t *r);

// `out = W·x + (alpha/r)·B·(A·x)` for row-major `w` (`d × k`).
//
// # Safety
// `w`, `x` and `out` must hold `d * k`, `k` and `d` doubles.
enum ClinoteStatus clinote_lora_forward(const struct ClinoteLora *lora,
                                        const double *w,
                                        const double *x,
                                        double *out);

// `out = W + (alpha/r)·B·A`, all row-major `d × k`.
//
// # Safety
// `w` and `out` must each hold `d * k` doubles.
enum ClinoteStatus clinote_lora_merge(const struct ClinoteLora *lora, const double *w, double *out);

// Releases an adapter. NULL is ignored.
//
// # Safety
// `lora` must be NULL or a handle not yet freed.
void clinote_lora_free(struct ClinoteLora *lora);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CLINOTE_H */
