#ifndef ATOMLAB_H
#define ATOMLAB_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * `w(ξ)` weighting of the disc integral.
 */
#define ATOMLAB_MODE_ANGULAR 0

/**
 * `w(1 - r)/(1 - r)` weighting of the disc integral.
 */
#define ATOMLAB_MODE_RADIAL 1

/**
 * Status codes.
 */
typedef enum AtomlabStatus {
  ATOMLAB_STATUS_OK = 0,
  ATOMLAB_STATUS_NULL_POINTER = 1,
  ATOMLAB_STATUS_INVALID_UTF8 = 2,
  ATOMLAB_STATUS_PARSE = 3,
  ATOMLAB_STATUS_INVALID_ARGUMENT = 4,
  ATOMLAB_STATUS_DIMENSION_MISMATCH = 5,
  /**
   * A point lies on or outside the unit circle.
   */
  ATOMLAB_STATUS_DOMAIN = 6,
  /**
   * Quadrature, convergence or integrability failure.
   */
  ATOMLAB_STATUS_NUMERICAL = 7,
  /**
   * The operation needs a checkerboard sign pattern.
   */
  ATOMLAB_STATUS_UNSUPPORTED = 8,
  ATOMLAB_STATUS_PRECONDITION_FAILED = 9,
  ATOMLAB_STATUS_PANIC = 10,
} AtomlabStatus;

/**
 * Atomic function `Σ α_k a_k`.
 */
typedef struct AtomlabFunction AtomlabFunction;

/**
 * Extension of an atomic function to the polydisc.
 */
typedef struct AtomlabProvider AtomlabProvider;

/**
 * Quadrature resolution.
 */
typedef struct AtomlabQuadrature {
  size_t angular_order;
  size_t radial_levels;
  size_t radial_order;
  double tolerance;
} AtomlabQuadrature;

/**
 * Result of a weighted analytic norm.
 */
typedef struct AtomlabNorm {
  double value;
  double error_indicator;
  double cells;
  double f0;
} AtomlabNorm;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *atomlab_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *atomlab_last_error_message(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and must not be used afterwards.
 */
void atomlab_string_free(char *s);

/**
 * Default quadrature resolution.
 */
struct AtomlabQuadrature atomlab_quadrature_default(void);

/**
 * `(e^{iξ} + z) / (e^{iξ} - z)`.
 *
 * # Safety
 * `out_re` and `out_im` must be valid for writes.
 */
enum AtomlabStatus atomlab_poisson_factor(double z_re,
                                          double z_im,
                                          double xi,
                                          double *out_re,
                                          double *out_im);

/**
 * One special atom with coefficient `coef`. `cube` is `a1,..,ad:h1,..,hd`;
 * `pattern` (NULL for checkerboard) is `checkerboard`, `axis:J`,
 * `parity:MASK` or `positive:K1,K2,..`; `weight` (NULL for Lebesgue) is one
 * factor spec for every axis or `d` specs separated by `;`.
 *
 * # Safety
 * String arguments must be NULL or NUL-terminated; `out` must be valid for
 * writes.
 */
enum AtomlabStatus atomlab_function_new_atom(const char *cube,
                                             const char *pattern,
                                             const char *weight,
                                             double coef,
                                             struct AtomlabFunction **out);

/**
 * Atomic function from its JSON form.
 *
 * # Safety
 * `json` must be NUL-terminated; `out` must be valid for writes.
 */
enum AtomlabStatus atomlab_function_from_json(const char *json, struct AtomlabFunction **out);

/**
 * JSON form of `f`; release with `atomlab_string_free`.
 *
 * # Safety
 * `f` must be a live handle; `out` must be valid for writes.
 */
enum AtomlabStatus atomlab_function_to_json(const struct AtomlabFunction *f, char **out);

/**
 * Haar decomposition of `2^{d m}` zero-mean samples on the dyadic grid of
 * `[0, 2π)^d` (axis 0 fastest).
 *
 * # Safety
 * `values` must hold `len` doubles; `weight` must be NULL or
 * NUL-terminated; `out` must be valid for writes.
 */
enum AtomlabStatus atomlab_haar_decompose(size_t d,
                                          uint32_t m,
                                          const double *values,
                                          size_t len,
                                          const char *weight,
                                          struct AtomlabFunction **out);

/**
 * Releases a function handle. NULL is ignored.
 *
 * # Safety
 * `f` must come from this library and must not be used afterwards.
 */
void atomlab_function_free(struct AtomlabFunction *f);

/**
 * Dimension of `f` and its number of terms.
 *
 * # Safety
 * `f` must be a live handle; out-pointers must be valid for writes.
 */
enum AtomlabStatus atomlab_function_shape(const struct AtomlabFunction *f,
                                          size_t *out_dim,
                                          size_t *out_terms);

/**
 * `f(ξ)` at a point of `[0, 2π)^d`.
 *
 * # Safety
 * `f` must be a live handle; `point` must hold `len` doubles; `out` must be
 * valid for writes.
 */
enum AtomlabStatus atomlab_function_eval(const struct AtomlabFunction *f,
                                         const double *point,
                                         size_t len,
                                         double *out);

/**
 * Upper bound `Σ|α_k|` of the atomic norm.
 *
 * # Safety
 * `f` must be a live handle; `out` must be valid for writes.
 */
enum AtomlabStatus atomlab_function_bw_upper(const struct AtomlabFunction *f, double *out);

/**
 * Extension of `f`. With `quadrature` NULL the closed form is used;
 * otherwise the generic quadrature extension at that resolution. The
 * provider keeps its own copy of `f`.
 *
 * # Safety
 * `f` must be a live handle; `quadrature` must be NULL or valid; `out` must
 * be valid for writes.
 */
enum AtomlabStatus atomlab_provider_new(const struct AtomlabFunction *f,
                                        const struct AtomlabQuadrature *quadrature,
                                        struct AtomlabProvider **out);

/**
 * Releases a provider handle. NULL is ignored.
 *
 * # Safety
 * `p` must come from this library and must not be used afterwards.
 */
void atomlab_provider_free(struct AtomlabProvider *p);

/**
 * `F(z)` with `z` given as `d` interleaved `(re, im)` pairs.
 *
 * # Safety
 * `p` must be a live handle; `z` must hold `len` doubles; out-pointers must
 * be valid for writes.
 */
enum AtomlabStatus atomlab_provider_value(const struct AtomlabProvider *p,
                                          const double *z,
                                          size_t len,
                                          double *out_re,
                                          double *out_im);

/**
 * `∂F/∂z_j` for every `j`, written as `d` interleaved `(re, im)` pairs into
 * `out`, which must hold `out_len = 2d` doubles.
 *
 * # Safety
 * `p` must be a live handle; `z` must hold `len` doubles; `out` must be
 * valid for `out_len` writes.
 */
enum AtomlabStatus atomlab_provider_gradient(const struct AtomlabProvider *p,
                                             const double *z,
                                             size_t len,
                                             double *out,
                                             size_t out_len);

/**
 * `lim_{r→1} Re F(r e^{iξ})` along `r = 1 - 2^{-k}`, `k = k0..=k1`, with
 * the observed contraction ratio of the last step.
 *
 * # Safety
 * `p` must be a live handle; `xi` must hold `len` doubles; out-pointers
 * must be valid for writes.
 */
enum AtomlabStatus atomlab_radial_limit(const struct AtomlabProvider *p,
                                        const double *xi,
                                        size_t len,
                                        uint32_t k0,
                                        uint32_t k1,
                                        double *out_limit,
                                        double *out_ratio);

/**
 * Weighted analytic norm `|F(0)| + (2π)^{-d} ∫ |F'|^p w`. `weight` uses the
 * same syntax as in `atomlab_function_new_atom`; `quadrature` NULL means
 * the default resolution.
 *
 * # Safety
 * `p` must be a live handle; `weight` must be NUL-terminated;
 * `quadrature` must be NULL or valid; `out` must be valid for writes.
 */
enum AtomlabStatus atomlab_aw_norm(const struct AtomlabProvider *p,
                                   const char *weight,
                                   int mode,
                                   double exponent,
                                   const struct AtomlabQuadrature *quadrature,
                                   struct AtomlabNorm *out);

/**
 * JSON report of a verify suite (`all`, `k-bounds`, `lemma3`, `lemma4`,
 * `lemma5`, `main`, `inclusion`), identical to `atomlab verify SUITE --seed
 * SEED --json`. `out_pass` receives 1 if every check passed, else 0.
 *
 * # Safety
 * `suite` must be NUL-terminated; out-pointers must be valid for writes.
 */
enum AtomlabStatus atomlab_verify(const char *suite, uint64_t seed, char **out_json, int *out_pass);

/**
 * JSON array of class reports for a one-dimensional weight; `classes` is a
 * comma-separated list such as `dini:1,bn:2,calbp:2,doubling,ap:2`, or NULL
 * for that default list.
 *
 * # Safety
 * String arguments must be NULL (for `classes`) or NUL-terminated;
 * `out_json` must be valid for writes.
 */
enum AtomlabStatus atomlab_weight_classify(const char *weight,
                                           const char *classes,
                                           char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ATOMLAB_H */
