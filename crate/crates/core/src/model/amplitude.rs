//! Closed-form third-order four-wave-mixing amplitude for one velocity class.
//!
//! The amplitude for the grating written by pump `g` and the probe, read out
//! by the opposite pump, is
//!
//! ```text
//! A = -(N0/4) Ωf Ωb Ωp · F1 · Fpop · Fcoh
//! F1   = 1 / (-(Δ-δ) - kp·v + iΓ)
//! Fpop = (1-R)/(β + iγ1) + (1+R)/(β + iγ2),   β = δ + (kg - kp)·v
//! Fcoh = 1 / (-Δ + kg·v + iΓ) + 1 / ((δ+Δ) - kp·v + iΓ)
//! ```
//!
//! with Γ the total coherence decay rate and R = γ21 / (γ2 - γ1). `β` is the
//! pump–probe beat frequency in the atom frame. The carrier phase is dropped
//! and the dipole moment is set to one, so amplitudes are in arbitrary units.

use num_complex::Complex64;

use super::params::{DopplerShifts, FieldConfig, PumpSource, PumpTermMode, RelaxationParams, Velocity};
use crate::error::{Error, Result};
use crate::quadrature::gaussian_mean_reciprocal;

/// Relative tolerance used to decide that γ1 and γ2 coincide.
pub const DEFAULT_DEGENERACY_TOLERANCE: f64 = 1e-6;

pub fn derived_dephasing(relax: &RelaxationParams) -> f64 {
    relax.dephasing()
}

/// Weight `R` splitting the population-pulsation response into its two poles.
pub fn pulsation_weight_r(relax: &RelaxationParams) -> Result<f64> {
    pulsation_weight_r_with(relax, DEFAULT_DEGENERACY_TOLERANCE)
}

/// As [`pulsation_weight_r`], with the degeneracy threshold
/// `relative_tolerance · max(γ1, γ2)`.
pub fn pulsation_weight_r_with(relax: &RelaxationParams, relative_tolerance: f64) -> Result<f64> {
    let separation = relax.gamma2 - relax.gamma1;
    let tolerance = relative_tolerance * relax.gamma1.max(relax.gamma2);
    if separation.abs() <= tolerance {
        return Err(Error::DegenerateRates {
            separation: separation.abs(),
            tolerance,
        });
    }
    Ok(relax.gamma21 / separation)
}

/// Steady-state ρ11 − ρ22 in the absence of optical fields.
pub fn equilibrium_population_difference(pump: &PumpSource, relax: &RelaxationParams) -> Result<f64> {
    relax.require_steady_state()?;
    Ok(pump.lambda1 / relax.gamma1 - (pump.lambda2 / relax.gamma2) * (1.0 - relax.gamma21 / relax.gamma1))
}

/// Pre-evaluated constants of the amplitude for fixed parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeModel {
    pub detuning: f64,
    pub dephasing: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub weight_r: f64,
    pub population_difference: f64,
    pub mode: PumpTermMode,
    rabi_product: f64,
    prefactor: f64,
}

/// Velocity-independent pieces of one pathway, see [`AmplitudeModel::pathway_parts`].
#[derive(Debug, Clone, Copy)]
pub struct PathwayParts {
    /// Prefactor times `F1 · Fcoh`.
    pub coherent: Complex64,
    /// Atom-frame pump–probe beat frequency entering `Fpop`.
    pub beat: f64,
}

impl AmplitudeModel {
    pub fn new(fields: &FieldConfig, relax: &RelaxationParams, pump: &PumpSource, mode: PumpTermMode) -> Result<Self> {
        Self::with_tolerance(fields, relax, pump, mode, DEFAULT_DEGENERACY_TOLERANCE)
    }

    pub fn with_tolerance(
        fields: &FieldConfig,
        relax: &RelaxationParams,
        pump: &PumpSource,
        mode: PumpTermMode,
        degeneracy_tolerance: f64,
    ) -> Result<Self> {
        relax.validate()?;
        pump.validate()?;
        fields.validate()?;
        let population_difference = equilibrium_population_difference(pump, relax)?;
        let weight_r = pulsation_weight_r_with(relax, degeneracy_tolerance)?;
        Ok(Self {
            detuning: fields.detuning,
            dephasing: relax.dephasing(),
            gamma1: relax.gamma1,
            gamma2: relax.gamma2,
            weight_r,
            population_difference,
            mode,
            rabi_product: fields.rabi_product(),
            prefactor: -0.25 * population_difference * fields.rabi_product(),
        })
    }

    /// Copy with a different population difference and pulsation weight,
    /// e.g. for a velocity class whose rates are modified locally.
    pub fn with_population(&self, population_difference: f64, weight_r: f64) -> Self {
        Self {
            population_difference,
            weight_r,
            prefactor: -0.25 * population_difference * self.rabi_product,
            ..*self
        }
    }

    /// Mean of the population factor over a centred Gaussian spread (std `sigma`) of the beat.
    pub fn population_factor_broadened(&self, beat: f64, sigma: f64) -> Complex64 {
        let r = self.weight_r;
        (1.0 - r) * gaussian_mean_reciprocal(Complex64::new(beat, self.gamma1), sigma)
            + (1.0 + r) * gaussian_mean_reciprocal(Complex64::new(beat, self.gamma2), sigma)
    }

    /// Population-pulsation factor at atom-frame beat frequency `beat`.
    #[inline]
    pub fn population_factor(&self, beat: f64) -> Complex64 {
        let r = self.weight_r;
        (1.0 - r) / Complex64::new(beat, self.gamma1) + (1.0 + r) / Complex64::new(beat, self.gamma2)
    }

    /// Everything but `Fpop` for the pathway whose grating is written by the
    /// pump with Doppler shift `grating_shift`.
    #[inline]
    pub fn pathway_parts(&self, delta: f64, grating_shift: f64, probe_shift: f64) -> PathwayParts {
        let g = self.dephasing;
        let d = self.detuning;
        let signal = 1.0 / Complex64::new(-(d - delta) - probe_shift, g);
        let coherence = 1.0 / Complex64::new(-d + grating_shift, g) + 1.0 / Complex64::new(delta + d - probe_shift, g);
        PathwayParts {
            coherent: self.prefactor * signal * coherence,
            beat: delta + grating_shift - probe_shift,
        }
    }

    #[inline]
    pub fn pathway(&self, delta: f64, grating_shift: f64, probe_shift: f64) -> Complex64 {
        let parts = self.pathway_parts(delta, grating_shift, probe_shift);
        parts.coherent * self.population_factor(parts.beat)
    }

    #[inline]
    pub fn amplitude(&self, delta: f64, shifts: DopplerShifts) -> Complex64 {
        let forward = self.pathway(delta, shifts.forward, shifts.probe);
        match self.mode {
            PumpTermMode::PaperSingleTerm => forward,
            PumpTermMode::BothPumps => forward + self.pathway(delta, shifts.backward, shifts.probe),
        }
    }
}

/// Complex third-order amplitude at probe detuning `delta` for one velocity class.
pub fn fwm_amplitude(
    delta: f64,
    v: Velocity,
    fields: &FieldConfig,
    relax: &RelaxationParams,
    pump: &PumpSource,
    mode: PumpTermMode,
) -> Result<Complex64> {
    let model = AmplitudeModel::new(fields, relax, pump, mode)?;
    Ok(model.amplitude(delta, fields.doppler_shifts(v)))
}
