#ifndef EIGENSERIES_H
#define EIGENSERIES_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EsKernel {
  ES_KERNEL_RESOLVENT = 0,
  ES_KERNEL_SERIES = 1,
} EsKernel;

typedef enum EsMethod {
  ES_METHOD_FIXED_POINT = 0,
  ES_METHOD_SERIES_EQ19 = 1,
} EsMethod;

typedef enum EsModel {
  ES_MODEL_TWO_LEVEL = 0,
  ES_MODEL_CHAIN = 1,
  ES_MODEL_BANDED_RANDOM = 2,
} EsModel;

typedef enum EsQForm {
  ES_Q_FORM_CLOSED = 0,
  ES_Q_FORM_SERIES = 1,
} EsQForm;

typedef enum EsStatus {
  ES_STATUS_OK = 0,
  ES_STATUS_NULL_POINTER = -1,
  ES_STATUS_INVALID_ARGUMENT = -2,
  ES_STATUS_NOT_HERMITIAN = -3,
  ES_STATUS_DEGENERATE = -4,
  ES_STATUS_SINGULAR = -5,
  ES_STATUS_NO_REAL_ROOT = -6,
  ES_STATUS_NOT_CONVERGED = -7,
  ES_STATUS_REGIME_EXCEEDED = -8,
  ES_STATUS_PANIC = -99,
} EsStatus;

/**
 * Opaque Hamiltonian handle.
 */
typedef struct EsHamiltonian EsHamiltonian;

/**
 * Opaque spectrum handle.
 */
typedef struct EsSpectrum EsSpectrum;

/**
 * Solver settings; fill with [`es_solve_options_default`] first.
 */
typedef struct EsSolveOptions {
  double root_tol;
  double gap_tol;
  uint32_t continuation_steps;
  /**
   * Path order of the series forms.
   */
  uint32_t series_order;
  uint32_t eq19_max_m;
  enum EsMethod method;
  enum EsKernel kernel;
  enum EsQForm q_form;
  uint32_t jobs;
} EsSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *es_version(void);

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next library call on the same thread.
 */
const char *es_last_error_message(void);

/**
 * Defaults matching the command-line tool.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `EsSolveOptions`.
 */
enum EsStatus es_solve_options_default(struct EsSolveOptions *out);

/**
 * Builds a Hamiltonian from row-major parts. `im` may be null. With
 * `symmetrize`, `(A + A†)/2` is used instead of rejecting asymmetry.
 *
 * # Safety
 * `re` (and `im` if non-null) must point to `dim * dim` doubles; `out`
 * must be writable.
 */
enum EsStatus es_hamiltonian_from_parts(size_t dim,
                                        const double *re,
                                        const double *im,
                                        bool symmetrize,
                                        struct EsHamiltonian **out);

/**
 * Builds one of the generated model Hamiltonians. `seed` is used by
 * `ES_MODEL_BANDED_RANDOM` only.
 *
 * # Safety
 * `out` must be writable.
 */
enum EsStatus es_hamiltonian_from_model(enum EsModel model,
                                        size_t dim,
                                        double delta,
                                        double lambda,
                                        uint64_t seed,
                                        struct EsHamiltonian **out);

/**
 * Releases a Hamiltonian; null is ignored.
 *
 * # Safety
 * `h` must be null or a handle from this library not yet freed.
 */
void es_hamiltonian_free(struct EsHamiltonian *h);

/**
 * # Safety
 * `h` must be a live handle; `out` must be writable.
 */
enum EsStatus es_hamiltonian_dim(const struct EsHamiltonian *h, size_t *out);

/**
 * Solves every level. Returns `ES_STATUS_OK` when the spectrum was
 * attempted; individual levels may still have failed, see
 * [`es_spectrum_level_status`]. `opts` may be null for defaults.
 *
 * # Safety
 * `h` must be a live handle, `opts` null or valid, `out` writable.
 */
enum EsStatus es_solve_spectrum(const struct EsHamiltonian *h,
                                const struct EsSolveOptions *opts,
                                struct EsSpectrum **out);

/**
 * Releases a spectrum; null is ignored.
 *
 * # Safety
 * `sp` must be null or a handle from this library not yet freed.
 */
void es_spectrum_free(struct EsSpectrum *sp);

/**
 * # Safety
 * `sp` must be a live handle; `out` must be writable.
 */
enum EsStatus es_spectrum_len(const struct EsSpectrum *sp, size_t *out);

/**
 * Status of the solve for level `gamma`; the message is available from
 * [`es_last_error_message`] when it is not `ES_STATUS_OK`.
 *
 * # Safety
 * `sp` must be a live handle.
 */
enum EsStatus es_spectrum_level_status(const struct EsSpectrum *sp, size_t gamma);

/**
 * # Safety
 * `sp` must be a live handle; `out` must be writable.
 */
enum EsStatus es_spectrum_energy(const struct EsSpectrum *sp, size_t gamma, double *out);

/**
 * Eigen-residual `‖Hv − Ẽv‖₂/‖v‖₂` of level `gamma`.
 *
 * # Safety
 * `sp` must be a live handle; `out` must be writable.
 */
enum EsStatus es_spectrum_residual(const struct EsSpectrum *sp, size_t gamma, double *out);

/**
 * Eigenvector amplitudes of level `gamma`, with amplitude 1 at `gamma`.
 *
 * # Safety
 * `re_out` and `im_out` must each hold `len` doubles; `len` must equal the
 * dimension.
 */
enum EsStatus es_spectrum_amplitudes(const struct EsSpectrum *sp,
                                     size_t gamma,
                                     double *re_out,
                                     double *im_out,
                                     size_t len);

/**
 * `ψ(t)` from the order-`order` expansion. The state is written even when
 * the status is `ES_STATUS_NOT_CONVERGED` (last order above 1e-10).
 *
 * # Safety
 * `psi_re` (and `psi_im` if non-null), `out_re`, `out_im` must hold `len`
 * doubles each.
 */
enum EsStatus es_propagate(const struct EsHamiltonian *h,
                           const double *psi_re,
                           const double *psi_im,
                           size_t len,
                           double t,
                           uint32_t order,
                           double *out_re,
                           double *out_im);

/**
 * Ascending eigenvalues from dense diagonalization.
 *
 * # Safety
 * `out` must hold `len` doubles; `len` must equal the dimension.
 */
enum EsStatus es_oracle_eigenvalues(const struct EsHamiltonian *h, double *out, size_t len);

/**
 * Kernel `R_γ(z)` in closed resolvent form.
 *
 * # Safety
 * `h` must be a live handle; `out_re` and `out_im` must be writable.
 */
enum EsStatus es_kernel_resolvent(const struct EsHamiltonian *h,
                                  size_t gamma,
                                  double z_re,
                                  double z_im,
                                  double *out_re,
                                  double *out_im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EIGENSERIES_H */
