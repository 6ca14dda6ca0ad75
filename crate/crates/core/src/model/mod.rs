//! Parameter types and the closed-form single-velocity lineshape.

mod amplitude;
mod params;
mod spectrum;

pub use amplitude::{
    derived_dephasing, equilibrium_population_difference, fwm_amplitude, pulsation_weight_r, pulsation_weight_r_with,
    AmplitudeModel, PathwayParts, DEFAULT_DEGENERACY_TOLERANCE,
};
pub use params::{
    DopplerShifts, FieldConfig, PumpSource, PumpTermMode, RelaxationParams, Velocity, DEFAULT_THETA, DEFAULT_WAVENUMBER,
};
pub use spectrum::{spectrum_stationary, DetuningGrid, QuadratureDiagnostics, Spectrum, SpectrumMeta, SpectrumPoint};
