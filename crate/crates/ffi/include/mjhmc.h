#ifndef MJHMC_H
#define MJHMC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MjhmcStatus {
  MJHMC_STATUS_OK = 0,
  MJHMC_STATUS_NULL_POINTER = 1,
  MJHMC_STATUS_INVALID_ARGUMENT = 2,
  // Integration blew up, a fit failed, or an eigensolve did not converge.
  MJHMC_STATUS_NUMERICAL = 3,
  MJHMC_STATUS_PANIC = 4,
} MjhmcStatus;

typedef enum MjhmcTransition {
  MJHMC_TRANSITION_LEAPFROG = 0,
  MJHMC_TRANSITION_FLIP = 1,
  MJHMC_TRANSITION_RANDOMIZE = 2,
} MjhmcTransition;

// MJHMC chain handle.
typedef struct MjhmcChainHandle MjhmcChainHandle;

// Target distribution handle.
typedef struct MjhmcEnergy MjhmcEnergy;

// HMC control chain handle.
typedef struct MjhmcHmcHandle MjhmcHmcHandle;

// One jump of an MJHMC chain. The state occupied during the holding time
// is written separately by [`mjhmc_chain_step`].
typedef struct MjhmcJump {
  double holding_time;
  enum MjhmcTransition transition;
  uint64_t cumulative_gradient_evals;
} MjhmcJump;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message on this thread into `buf` (NUL
// terminated, truncated to `len`). Returns the full message length
// without the terminator, or 0 when there is no error.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t mjhmc_last_error_message(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *mjhmc_version(void);

// Two-dimensional rough well.
struct MjhmcEnergy *mjhmc_energy_rough_well(double sigma1, double sigma2);

// Zero-mean Gaussian with diagonal precision.
//
// # Safety
// `precision` must point to `dim` readable doubles.
struct MjhmcEnergy *mjhmc_energy_gaussian(const double *precision, size_t dim);

// # Safety
// `energy` must be null or a handle from an `mjhmc_energy_*` constructor
// that has not been freed.
void mjhmc_energy_free(struct MjhmcEnergy *energy);

// Returns 0 for a null handle.
//
// # Safety
// `energy` must be null or a live handle.
size_t mjhmc_energy_dim(const struct MjhmcEnergy *energy);

// Energy at `x` and, when `grad` is non-null, its gradient.
//
// # Safety
// `x` and `grad` (if non-null) must each hold `len` doubles.
enum MjhmcStatus mjhmc_energy_eval(const struct MjhmcEnergy *energy,
                                   const double *x,
                                   size_t len,
                                   double *out_energy,
                                   double *grad);

// Starts an MJHMC chain at position `x0` with momentum drawn from `seed`.
// The energy handle may be freed afterwards.
//
// # Safety
// `energy` must be a live handle and `x0` must hold `dim` doubles.
struct MjhmcChainHandle *mjhmc_chain_new(const struct MjhmcEnergy *energy,
                                         double epsilon,
                                         size_t steps,
                                         double beta,
                                         uint64_t seed,
                                         const double *x0,
                                         size_t dim);

// # Safety
// `chain` must be null or a live handle.
void mjhmc_chain_free(struct MjhmcChainHandle *chain);

// Advances one jump. The position held during the jump's holding time
// is written to `x` when it is non-null.
//
// # Safety
// `chain` must be a live handle, `jump` writable, and `x` null or `len`
// writable doubles.
enum MjhmcStatus mjhmc_chain_step(struct MjhmcChainHandle *chain,
                                  struct MjhmcJump *jump,
                                  double *x,
                                  size_t len);

// Current position (the state the next jump leaves from).
//
// # Safety
// `chain` must be a live handle and `x` must hold `len` doubles.
enum MjhmcStatus mjhmc_chain_position(const struct MjhmcChainHandle *chain, double *x, size_t len);

// Gradient evaluations spent so far, 0 for a null handle.
//
// # Safety
// `chain` must be null or a live handle.
uint64_t mjhmc_chain_gradient_evals(const struct MjhmcChainHandle *chain);

// Starts an HMC control chain; `beta` is the per-step probability of a
// full momentum redraw.
//
// # Safety
// As [`mjhmc_chain_new`].
struct MjhmcHmcHandle *mjhmc_hmc_new(const struct MjhmcEnergy *energy,
                                     double epsilon,
                                     size_t steps,
                                     double beta,
                                     uint64_t seed,
                                     const double *x0,
                                     size_t dim);

// # Safety
// `chain` must be null or a live handle.
void mjhmc_hmc_free(struct MjhmcHmcHandle *chain);

// One HMC step. `accepted` and `x` may be null.
//
// # Safety
// `chain` must be a live handle; `x` null or `len` writable doubles.
enum MjhmcStatus mjhmc_hmc_step(struct MjhmcHmcHandle *chain,
                                bool *accepted,
                                double *x,
                                size_t len);

// # Safety
// `chain` must be null or a live handle.
uint64_t mjhmc_hmc_gradient_evals(const struct MjhmcHmcHandle *chain);

// # Safety
// `chain` must be null or a live handle.
double mjhmc_hmc_acceptance_rate(const struct MjhmcHmcHandle *chain);

// Spectral gaps of the MJHMC jump chain and the HMC control on the ring
// ladder with rung energies `energies[0..k]`, after mixing in a
// self-transition probability `holding` (0 for the raw chains).
//
// # Safety
// `energies` must hold `k` doubles; both outputs must be writable.
enum MjhmcStatus mjhmc_ladder_gaps(const double *energies,
                                   size_t k,
                                   double holding,
                                   double *out_mjhmc,
                                   double *out_hmc);

// Stationarity residual `max|G pi| / max pi` of the MJHMC generator.
//
// # Safety
// `energies` must hold `k` doubles; `out_residual` must be writable.
enum MjhmcStatus mjhmc_ladder_balance_residual(const double *energies,
                                               size_t k,
                                               double *out_residual);

// Fits `C(n) = Re[exp(r n)]` to `n` points; writes `r`'s real and
// imaginary parts.
//
// # Safety
// `lags` and `values` must hold `n` doubles; outputs must be writable.
enum MjhmcStatus mjhmc_fit_decay(const double *lags,
                                 const double *values,
                                 size_t n,
                                 double *out_real,
                                 double *out_imag);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MJHMC_H */
