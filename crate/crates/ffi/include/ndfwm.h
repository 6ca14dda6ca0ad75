#ifndef NDFWM_H
#define NDFWM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Which pathways enter the amplitude.
typedef enum NdfwmMode {
  // Forward-pump grating only.
  NDFWM_MODE_PAPER = 0,
  // Both pump gratings.
  NDFWM_MODE_BOTH_PUMPS = 1,
} NdfwmMode;

// Result of every fallible call.
typedef enum NdfwmStatus {
  NDFWM_STATUS_OK = 0,
  NDFWM_STATUS_NULL_POINTER = 1,
  NDFWM_STATUS_INVALID_PARAMETER = 2,
  NDFWM_STATUS_DEGENERATE_RATES = 3,
  NDFWM_STATUS_NUMERICAL_FAILURE = 4,
  NDFWM_STATUS_INDEX_OUT_OF_RANGE = 5,
  NDFWM_STATUS_PANIC = 6,
} NdfwmStatus;

// Rates, fields, pumping and mode of one model.
typedef struct NdfwmModel NdfwmModel;

// A computed spectrum.
typedef struct NdfwmSpectrum NdfwmSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates a model with the given rates (MHz), default fields and pumping into level 1 at `gamma1`.
//
// Writes the handle to `out`. Fails with `DegenerateRates` when γ1 and γ2 coincide.
//
// # Safety
// `out` must be null or valid for writes.
enum NdfwmStatus ndfwm_model_new(double gamma1,
                                 double gamma2,
                                 double gamma21,
                                 double gamma_ph,
                                 struct NdfwmModel **out);

// Releases a model. Null is ignored.
//
// # Safety
// `model` must be null or a handle from [`ndfwm_model_new`] not yet freed.
void ndfwm_model_free(struct NdfwmModel *model);

// Sets Rabi frequencies (MHz), pump detuning (MHz), wavenumber (rad/µm) and pump–probe angle (rad).
//
// # Safety
// `model` must be null or a live handle.
enum NdfwmStatus ndfwm_model_set_fields(struct NdfwmModel *model,
                                        double omega_f,
                                        double omega_b,
                                        double omega_p,
                                        double detuning,
                                        double wavenumber,
                                        double theta);

// Sets the incoherent pumping rates into levels 1 and 2.
//
// # Safety
// `model` must be null or a live handle.
enum NdfwmStatus ndfwm_model_set_pump(struct NdfwmModel *model, double lambda1, double lambda2);

// # Safety
// `model` must be null or a live handle.
enum NdfwmStatus ndfwm_model_set_mode(struct NdfwmModel *model, enum NdfwmMode mode);

// Complex amplitude at probe detuning `delta` (MHz) for one velocity class (m/s).
//
// # Safety
// `model` must be null or a live handle; `re` and `im` null or valid for writes.
enum NdfwmStatus ndfwm_amplitude(const struct NdfwmModel *model,
                                 double delta,
                                 double v_longitudinal,
                                 double v_transverse,
                                 double *re,
                                 double *im);

// Spectrum of atoms at rest on `points` evenly spaced detunings from `start` to `stop` (MHz).
//
// # Safety
// `model` must be null or a live handle; `out` null or valid for writes.
enum NdfwmStatus ndfwm_spectrum_stationary(const struct NdfwmModel *model,
                                           double start,
                                           double stop,
                                           size_t points,
                                           struct NdfwmSpectrum **out);

// Maxwell–Boltzmann averaged spectrum with Doppler width `ku` (MHz) and quadrature order `order`.
//
// A doubling check with relative tolerance `tolerance` runs when `tolerance > 0`.
//
// # Safety
// `model` must be null or a live handle; `out` null or valid for writes.
enum NdfwmStatus ndfwm_spectrum_doppler(const struct NdfwmModel *model,
                                        double start,
                                        double stop,
                                        size_t points,
                                        double ku,
                                        size_t order,
                                        double tolerance,
                                        struct NdfwmSpectrum **out);

// Number of points; zero for a null handle.
//
// # Safety
// `spectrum` must be null or a live handle.
size_t ndfwm_spectrum_len(const struct NdfwmSpectrum *spectrum);

// Reads point `index`. Any output pointer may be null to skip it.
//
// # Safety
// `spectrum` must be null or a live handle; outputs null or valid for writes.
enum NdfwmStatus ndfwm_spectrum_get(const struct NdfwmSpectrum *spectrum,
                                    size_t index,
                                    double *delta,
                                    double *re,
                                    double *im,
                                    double *intensity);

// Releases a spectrum. Null is ignored.
//
// # Safety
// `spectrum` must be null or a handle from this library not yet freed.
void ndfwm_spectrum_free(struct NdfwmSpectrum *spectrum);

// Expected side-peak positions `-2Δ` and `+2Δ`.
//
// # Safety
// `minus` and `plus` must be null or valid for writes.
enum NdfwmStatus ndfwm_predict_side_peaks(double detuning, double *minus, double *plus);

// Writes 1 to `out` when `γ1 > γ2 − γ21`, else 0.
//
// # Safety
// `out` must be null or valid for writes.
enum NdfwmStatus ndfwm_dip_condition(double gamma1, double gamma2, double gamma21, int32_t *out);

// Message of the last failed call on this thread; empty after a success.
//
// The pointer stays valid until the next call into this library on the same thread.
const char *ndfwm_last_error_message(void);

// Library version as a NUL-terminated string with static lifetime.
const char *ndfwm_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NDFWM_H */
