#ifndef MULTISADDLE_H
#define MULTISADDLE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every exported function.
 */
typedef enum MspStatus {
  MSP_STATUS_OK = 0,
  MSP_STATUS_NULL_POINTER = 1,
  MSP_STATUS_INVALID_ARGUMENT = 2,
  MSP_STATUS_DIMENSION_MISMATCH = 3,
  MSP_STATUS_NOT_POSITIVE_DEFINITE = 4,
  MSP_STATUS_SCHUR_NOT_SPD = 5,
  MSP_STATUS_NOT_CONVERGED = 6,
  MSP_STATUS_BREAKDOWN = 7,
  MSP_STATUS_IO = 8,
  MSP_STATUS_PARSE = 9,
  MSP_STATUS_PANIC = 10,
  MSP_STATUS_INTERNAL = 11,
} MspStatus;

/**
 * Preconditioner structure.
 */
typedef enum MspPreconditionerKind {
  /**
   * `diag(Â_0, Ŝ_1, …, Ŝ_k)`.
   */
  MSP_PRECONDITIONER_KIND_BLOCK_DIAGONAL = 0,
  /**
   * `P_L P_D⁻¹ P_U`.
   */
  MSP_PRECONDITIONER_KIND_FACTORIZED = 1,
} MspPreconditionerKind;

/**
 * Opaque preconditioner; keeps its system alive.
 */
typedef struct MspPreconditioner MspPreconditioner;

/**
 * Opaque block saddle-point system.
 */
typedef struct MspSystem MspSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread; empty after a success.
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *msp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *msp_version(void);

/**
 * Builds a system from dense row-major blocks.
 *
 * `sizes` has `k + 1` entries. `a_blocks[j]` points to `sizes[j]²` values
 * (`j = 0..=k`); `b_blocks[j - 1]` points to `sizes[j]·sizes[j-1]` values
 * (`j = 1..=k`).
 *
 * # Safety
 * All pointers must be valid for the stated lengths; `out` must be writable.
 */
enum MspStatus msp_system_from_dense(size_t k,
                                     const size_t *sizes,
                                     const double *const *a_blocks,
                                     const double *const *b_blocks,
                                     struct MspSystem **out);

/**
 * Random test system number `trial` for `(k, seed)`, with right-hand side `A w`.
 *
 * # Safety
 * `out` must be writable.
 */
enum MspStatus msp_system_random(size_t k, uint64_t seed, size_t trial, struct MspSystem **out);

/**
 * Double saddle-point problem on the unit square with `h = 2^-level`.
 *
 * # Safety
 * `out` must be writable.
 */
enum MspStatus msp_system_double(uint32_t level, double alpha, struct MspSystem **out);

/**
 * Quadruple saddle-point problem on the unit disc with `h = 2^-level`.
 *
 * # Safety
 * `out` must be writable.
 */
enum MspStatus msp_system_quadruple(uint32_t level,
                                    double alpha,
                                    double lambda,
                                    double rho,
                                    struct MspSystem **out);

/**
 * Loads a system written by [`msp_system_save`].
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum MspStatus msp_system_load(const char *path, struct MspSystem **out);

/**
 * Writes the blocks as MatrixMarket files plus a manifest into directory `path`.
 *
 * # Safety
 * `sys` must be a live handle; `path` a NUL-terminated string.
 */
enum MspStatus msp_system_save(const struct MspSystem *sys, const char *path);

/**
 * Number of blocks minus one.
 *
 * # Safety
 * `sys` must be a live handle; `k` writable.
 */
enum MspStatus msp_system_k(const struct MspSystem *sys, size_t *k);

/**
 * Total dimension.
 *
 * # Safety
 * `sys` must be a live handle; `dim` writable.
 */
enum MspStatus msp_system_dim(const struct MspSystem *sys, size_t *dim);

/**
 * Size of block `j`.
 *
 * # Safety
 * `sys` must be a live handle; `size` writable.
 */
enum MspStatus msp_system_block_size(const struct MspSystem *sys, size_t j, size_t *size);

/**
 * Copies the built-in right-hand side into `rhs` (length `dim`).
 * Systems built from raw blocks or files have none (`InvalidArgument`).
 *
 * # Safety
 * `sys` must be a live handle; `rhs` valid for `len` values.
 */
enum MspStatus msp_system_rhs(const struct MspSystem *sys, double *rhs, size_t len);

/**
 * `y = A x`.
 *
 * # Safety
 * `sys` must be a live handle; `x`, `y` valid for `len` values.
 */
enum MspStatus msp_system_apply(const struct MspSystem *sys,
                                const double *x,
                                double *y,
                                size_t len);

/**
 * Releases a system. Null is ignored.
 *
 * # Safety
 * `sys` must come from this library and not be used afterwards.
 */
void msp_system_free(struct MspSystem *sys);

/**
 * Preconditioner with exact blocks `A_0, S_1, …, S_k` (dense Schur chain).
 *
 * # Safety
 * `sys` must be a live handle; `out` writable.
 */
enum MspStatus msp_preconditioner_exact(const struct MspSystem *sys,
                                        enum MspPreconditionerKind kind,
                                        struct MspPreconditioner **out);

/**
 * Exact blocks multiplied by `factors[j] > 0` (`k + 1` values).
 *
 * # Safety
 * `sys` must be a live handle; `factors` valid for `len` values; `out` writable.
 */
enum MspStatus msp_preconditioner_scaled(const struct MspSystem *sys,
                                         enum MspPreconditionerKind kind,
                                         const double *factors,
                                         size_t len,
                                         struct MspPreconditioner **out);

/**
 * Inexact block approximations for systems built by [`msp_system_double`] or
 * [`msp_system_quadruple`], with `cheb_steps` Chebyshev steps for the mass matrix.
 *
 * # Safety
 * `sys` must be a live handle; `out` writable.
 */
enum MspStatus msp_preconditioner_fem(const struct MspSystem *sys,
                                      enum MspPreconditionerKind kind,
                                      size_t cheb_steps,
                                      struct MspPreconditioner **out);

/**
 * `y = P⁻¹ x`.
 *
 * # Safety
 * `p` must be a live handle; `x`, `y` valid for `len` values.
 */
enum MspStatus msp_preconditioner_apply(const struct MspPreconditioner *p,
                                        const double *x,
                                        double *y,
                                        size_t len);

/**
 * Releases a preconditioner. Null is ignored.
 *
 * # Safety
 * `p` must come from this library and not be used afterwards.
 */
void msp_preconditioner_free(struct MspPreconditioner *p);

/**
 * Preconditioned MINRES from `x = 0` until the relative preconditioned
 * residual drops below `tol`. `maxit = 0` picks a size-based default.
 *
 * On `NotConverged` the last iterate is still written to `x`. `iterations`
 * and `residual` (final relative residual) may be null.
 *
 * # Safety
 * Handles must be live, `sys` must be the system `p` was built for, `b` and
 * `x` valid for `len` values.
 */
enum MspStatus msp_minres_solve(const struct MspSystem *sys,
                                const struct MspPreconditioner *p,
                                const double *b,
                                double *x,
                                size_t len,
                                double tol,
                                size_t maxit,
                                size_t *iterations,
                                double *residual);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MULTISADDLE_H */
