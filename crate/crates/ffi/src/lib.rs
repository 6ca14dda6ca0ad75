//! C ABI for the ndfwm lineshape toolkit.
//!
//! Handles are opaque and owned by the caller: every `*_new` or spectrum
//! constructor must be matched by the corresponding `*_free`. Functions
//! return an [`NdfwmStatus`]; on failure the message is available from
//! [`ndfwm_last_error_message`] on the same thread. Handles may be shared
//! between threads for reading but not mutated concurrently.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ndfwm::analysis::{dip_condition, predict_side_peaks};
use ndfwm::doppler::{doppler_average, DopplerParams};
use ndfwm::model::{
    fwm_amplitude, pulsation_weight_r, spectrum_stationary, DetuningGrid, FieldConfig, PumpSource, PumpTermMode,
    RelaxationParams, Spectrum, Velocity,
};
use ndfwm::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NdfwmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    DegenerateRates = 3,
    NumericalFailure = 4,
    IndexOutOfRange = 5,
    Panic = 6,
}

/// Which pathways enter the amplitude.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NdfwmMode {
    /// Forward-pump grating only.
    Paper = 0,
    /// Both pump gratings.
    BothPumps = 1,
}

/// Rates, fields, pumping and mode of one model.
pub struct NdfwmModel {
    relax: RelaxationParams,
    pump: PumpSource,
    fields: FieldConfig,
    mode: PumpTermMode,
}

/// A computed spectrum.
pub struct NdfwmSpectrum {
    inner: Spectrum,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(err: &Error) -> NdfwmStatus {
    match err {
        Error::DegenerateRates { .. } => NdfwmStatus::DegenerateRates,
        e if e.is_numerical() => NdfwmStatus::NumericalFailure,
        _ => NdfwmStatus::InvalidParameter,
    }
}

enum Failure {
    Null(&'static str),
    Range(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, recording any error or panic for [`ndfwm_last_error_message`].
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NdfwmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            NdfwmStatus::Ok
        }
        Ok(Err(Failure::Null(name))) => {
            set_last_error(&format!("null pointer passed as `{name}`"));
            NdfwmStatus::NullPointer
        }
        Ok(Err(Failure::Range(msg))) => {
            set_last_error(&msg);
            NdfwmStatus::IndexOutOfRange
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            NdfwmStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: caller guarantees `p` is null or a live handle from this library
    unsafe { p.as_ref() }.ok_or(Failure::Null(name))
}

unsafe fn get_mut<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: as for `get`, plus exclusive access for the call
    unsafe { p.as_mut() }.ok_or(Failure::Null(name))
}

unsafe fn write<T>(p: *mut T, name: &'static str, value: T) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    // SAFETY: non-null and, per the contract, valid for writes
    unsafe { p.write(value) };
    Ok(())
}

/// Creates a model with the given rates (MHz), default fields and pumping into level 1 at `gamma1`.
///
/// Writes the handle to `out`. Fails with `DegenerateRates` when γ1 and γ2 coincide.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ndfwm_model_new(
    gamma1: f64,
    gamma2: f64,
    gamma21: f64,
    gamma_ph: f64,
    out: *mut *mut NdfwmModel,
) -> NdfwmStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let relax = RelaxationParams::new(gamma1, gamma2, gamma21, gamma_ph)?;
        relax.require_steady_state()?;
        pulsation_weight_r(&relax)?;
        let model = Box::new(NdfwmModel {
            relax,
            pump: PumpSource::ground_only(&relax),
            fields: FieldConfig::default(),
            mode: PumpTermMode::BothPumps,
        });
        unsafe { write(out, "out", Box::into_raw(model)) }
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle from [`ndfwm_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ndfwm_model_free(model: *mut NdfwmModel) {
    if !model.is_null() {
        // SAFETY: allocated by Box in ndfwm_model_new
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Sets Rabi frequencies (MHz), pump detuning (MHz), wavenumber (rad/µm) and pump–probe angle (rad).
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ndfwm_model_set_fields(
    model: *mut NdfwmModel,
    omega_f: f64,
    omega_b: f64,
    omega_p: f64,
    detuning: f64,
    wavenumber: f64,
    theta: f64,
) -> NdfwmStatus {
    guard(|| {
        let m = unsafe { get_mut(model, "model") }?;
        let fields = FieldConfig {
            omega_f,
            omega_b,
            omega_p,
            detuning,
            wavenumber,
            theta,
        };
        fields.validate()?;
        m.fields = fields;
        Ok(())
    })
}

/// Sets the incoherent pumping rates into levels 1 and 2.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ndfwm_model_set_pump(model: *mut NdfwmModel, lambda1: f64, lambda2: f64) -> NdfwmStatus {
    guard(|| {
        let m = unsafe { get_mut(model, "model") }?;
        m.pump = PumpSource::new(lambda1, lambda2)?;
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ndfwm_model_set_mode(model: *mut NdfwmModel, mode: NdfwmMode) -> NdfwmStatus {
    guard(|| {
        let m = unsafe { get_mut(model, "model") }?;
        m.mode = match mode {
            NdfwmMode::Paper => PumpTermMode::PaperSingleTerm,
            NdfwmMode::BothPumps => PumpTermMode::BothPumps,
        };
        Ok(())
    })
}

/// Complex amplitude at probe detuning `delta` (MHz) for one velocity class (m/s).
///
/// # Safety
/// `model` must be null or a live handle; `re` and `im` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ndfwm_amplitude(
    model: *const NdfwmModel,
    delta: f64,
    v_longitudinal: f64,
    v_transverse: f64,
    re: *mut f64,
    im: *mut f64,
) -> NdfwmStatus {
    guard(|| {
        let m = unsafe { get(model, "model") }?;
        if re.is_null() || im.is_null() {
            return Err(Failure::Null(if re.is_null() { "re" } else { "im" }));
        }
        let v = Velocity {
            longitudinal: v_longitudinal,
            transverse: v_transverse,
        };
        let a = fwm_amplitude(delta, v, &m.fields, &m.relax, &m.pump, m.mode)?;
        unsafe {
            write(re, "re", a.re)?;
            write(im, "im", a.im)
        }
    })
}

fn boxed(spectrum: Spectrum) -> *mut NdfwmSpectrum {
    Box::into_raw(Box::new(NdfwmSpectrum { inner: spectrum }))
}

/// Spectrum of atoms at rest on `points` evenly spaced detunings from `start` to `stop` (MHz).
///
/// # Safety
/// `model` must be null or a live handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ndfwm_spectrum_stationary(
    model: *const NdfwmModel,
    start: f64,
    stop: f64,
    points: usize,
    out: *mut *mut NdfwmSpectrum,
) -> NdfwmStatus {
    guard(|| {
        let m = unsafe { get(model, "model") }?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let grid = DetuningGrid::linspace(start, stop, points)?;
        let s = spectrum_stationary(&grid, &m.fields, &m.relax, &m.pump, m.mode)?;
        unsafe { write(out, "out", boxed(s)) }
    })
}

/// Maxwell–Boltzmann averaged spectrum with Doppler width `ku` (MHz) and quadrature order `order`.
///
/// A doubling check with relative tolerance `tolerance` runs when `tolerance > 0`.
///
/// # Safety
/// `model` must be null or a live handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ndfwm_spectrum_doppler(
    model: *const NdfwmModel,
    start: f64,
    stop: f64,
    points: usize,
    ku: f64,
    order: usize,
    tolerance: f64,
    out: *mut *mut NdfwmSpectrum,
) -> NdfwmStatus {
    guard(|| {
        let m = unsafe { get(model, "model") }?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let grid = DetuningGrid::linspace(start, stop, points)?;
        let doppler = DopplerParams {
            ku,
            order,
            tolerance: (tolerance > 0.0).then_some(tolerance),
            ..DopplerParams::default()
        };
        let s = doppler_average(&grid, &m.fields, &m.relax, &m.pump, &doppler, m.mode)?;
        unsafe { write(out, "out", boxed(s)) }
    })
}

/// Number of points; zero for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ndfwm_spectrum_len(spectrum: *const NdfwmSpectrum) -> usize {
    // SAFETY: null or live handle
    unsafe { spectrum.as_ref() }.map_or(0, |s| s.inner.len())
}

/// Reads point `index`. Any output pointer may be null to skip it.
///
/// # Safety
/// `spectrum` must be null or a live handle; outputs null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ndfwm_spectrum_get(
    spectrum: *const NdfwmSpectrum,
    index: usize,
    delta: *mut f64,
    re: *mut f64,
    im: *mut f64,
    intensity: *mut f64,
) -> NdfwmStatus {
    guard(|| {
        let s = unsafe { get(spectrum, "spectrum") }?;
        let p = s
            .inner
            .points
            .get(index)
            .ok_or_else(|| Failure::Range(format!("index {index} out of range for {} points", s.inner.len())))?;
        for (ptr, value) in [
            (delta, p.delta),
            (re, p.amplitude.re),
            (im, p.amplitude.im),
            (intensity, p.intensity),
        ] {
            if !ptr.is_null() {
                // SAFETY: non-null and valid for writes per the contract
                unsafe { ptr.write(value) };
            }
        }
        Ok(())
    })
}

/// Releases a spectrum. Null is ignored.
///
/// # Safety
/// `spectrum` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ndfwm_spectrum_free(spectrum: *mut NdfwmSpectrum) {
    if !spectrum.is_null() {
        // SAFETY: allocated by Box in `boxed`
        drop(unsafe { Box::from_raw(spectrum) });
    }
}

/// Expected side-peak positions `-2Δ` and `+2Δ`.
///
/// # Safety
/// `minus` and `plus` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ndfwm_predict_side_peaks(detuning: f64, minus: *mut f64, plus: *mut f64) -> NdfwmStatus {
    guard(|| {
        let (a, b) = predict_side_peaks(detuning);
        unsafe {
            write(minus, "minus", a)?;
            write(plus, "plus", b)
        }
    })
}

/// Writes 1 to `out` when `γ1 > γ2 − γ21`, else 0.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ndfwm_dip_condition(gamma1: f64, gamma2: f64, gamma21: f64, out: *mut i32) -> NdfwmStatus {
    guard(|| {
        let relax = RelaxationParams::new(gamma1, gamma2, gamma21, 0.0)?;
        unsafe { write(out, "out", i32::from(dip_condition(&relax))) }
    })
}

/// Message of the last failed call on this thread; empty after a success.
///
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ndfwm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a NUL-terminated string with static lifetime.
#[no_mangle]
pub extern "C" fn ndfwm_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
