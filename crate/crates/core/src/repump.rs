//! Phenomenological repump: a velocity-selective hole that returns atoms to
//! the lower level and enhances the effective 2→1 feeding.
//!
//! Nothing here is derived from first principles. The mixing factor `eta`,
//! the cap at γ2 and the optional saturation rate are tuning knobs, and every
//! spectrum produced with them says so in its metadata.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::doppler::{
    average_spectrum, fwm_denominators, fwm_transverse_averaged, DopplerParams, LinearDenominator, VelocityIntegrand,
};
use crate::error::{Error, Result};
use crate::model::{
    equilibrium_population_difference, pulsation_weight_r, AmplitudeModel, DetuningGrid, FieldConfig, PumpSource,
    PumpTermMode, RelaxationParams, Spectrum, Velocity, DEFAULT_WAVENUMBER,
};

pub const DEFAULT_ETA: f64 = 0.5;

/// Repump detunings (MHz) of the reference sweep.
pub const REFERENCE_SWEEP: [f64; 10] = [-205.0, -132.0, -79.0, -60.0, -15.0, 93.0, 122.0, 163.0, 168.0, 317.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RepumpParams {
    /// Repump detuning Δr (MHz).
    pub delta_r: f64,
    /// Repump strength (MHz).
    pub rate: f64,
    /// Effective linewidth of the repump interaction (MHz).
    pub width: f64,
    /// Repump wavenumber along the forward pump (rad/µm); negative for counter-propagation.
    pub k_r: f64,
    /// Fraction of the repump rate added to the 2→1 feeding.
    pub eta: f64,
    /// Keep the enhanced feeding at or below γ2.
    pub cap_feeding: bool,
    /// Saturation rate `s`: the local rate becomes `r L / (1 + r L / s)`. `None` disables it.
    pub saturation: Option<f64>,
}

impl Default for RepumpParams {
    fn default() -> Self {
        Self {
            delta_r: 0.0,
            rate: 0.0,
            width: 6.0,
            k_r: DEFAULT_WAVENUMBER,
            eta: DEFAULT_ETA,
            cap_feeding: true,
            saturation: None,
        }
    }
}

impl RepumpParams {
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be finite, got {v}")))
            }
        };
        finite("delta_r", self.delta_r)?;
        finite("rate", self.rate)?;
        finite("width", self.width)?;
        finite("k_r", self.k_r)?;
        if self.rate < 0.0 {
            return Err(Error::param("rate", format!("must be >= 0, got {}", self.rate)));
        }
        if !(self.width > 0.0) {
            return Err(Error::param("width", format!("must be > 0, got {}", self.width)));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::param("eta", format!("must lie in [0, 1], got {}", self.eta)));
        }
        if let Some(s) = self.saturation {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::param("saturation", format!("must be > 0, got {s}")));
            }
        }
        Ok(())
    }

    /// Lines for spectrum metadata flagging the invented knobs.
    pub fn notes(&self) -> Vec<String> {
        vec![
            "repump model is phenomenological: eta, the feeding cap and the saturation rate are free knobs".into(),
            format!(
                "repump: delta_r = {}, rate = {}, width = {}, k_r = {}, eta = {}, cap_feeding = {}, saturation = {}",
                self.delta_r,
                self.rate,
                self.width,
                self.k_r,
                self.eta,
                self.cap_feeding,
                self.saturation.map_or("none".to_string(), |s| s.to_string())
            ),
        ]
    }
}

/// Lorentzian velocity selection `(w/2)² / ((Δr + k_R v)² + (w/2)²)` for longitudinal velocity `v` (m/s).
pub fn hole_weight(v: f64, repump: &RepumpParams) -> f64 {
    let half = 0.5 * repump.width;
    let offset = repump.delta_r + repump.k_r * v;
    half * half / (offset * offset + half * half)
}

/// Local repump rate seen by velocity class `v`.
pub fn local_rate(v: f64, repump: &RepumpParams) -> f64 {
    let raw = repump.rate * hole_weight(v, repump);
    match repump.saturation {
        Some(s) => raw / (1.0 + raw / s),
        None => raw,
    }
}

/// Relaxation and pumping of velocity class `v` with the repump on.
pub fn effective_params(
    relax: &RelaxationParams,
    pump: &PumpSource,
    repump: &RepumpParams,
    v: Velocity,
) -> (RelaxationParams, PumpSource) {
    let r = local_rate(v.longitudinal, repump);
    let mut feeding = relax.gamma21 + repump.eta * r;
    if repump.cap_feeding {
        feeding = feeding.min(relax.gamma2.max(relax.gamma21));
    }
    (
        RelaxationParams {
            gamma21: feeding,
            ..*relax
        },
        PumpSource {
            lambda1: pump.lambda1 + r,
            ..*pump
        },
    )
}

/// Closed-form amplitude with per-class repump modifications.
#[derive(Debug, Clone, Copy)]
pub struct RepumpIntegrand {
    pub base: AmplitudeModel,
    pub fields: FieldConfig,
    pub relax: RelaxationParams,
    pub pump: PumpSource,
    pub repump: RepumpParams,
}

impl RepumpIntegrand {
    pub fn new(
        fields: &FieldConfig,
        relax: &RelaxationParams,
        pump: &PumpSource,
        repump: &RepumpParams,
        mode: PumpTermMode,
    ) -> Result<Self> {
        repump.validate()?;
        Ok(Self {
            base: AmplitudeModel::new(fields, relax, pump, mode)?,
            fields: *fields,
            relax: *relax,
            pump: *pump,
            repump: *repump,
        })
    }

    fn class_model(&self, longitudinal: f64) -> AmplitudeModel {
        if self.repump.rate == 0.0 {
            return self.base;
        }
        let (relax, pump) = effective_params(&self.relax, &self.pump, &self.repump, Velocity::along(longitudinal));
        // γ1 and γ2 are untouched, so neither call can fail once the base model exists
        let n0 = equilibrium_population_difference(&pump, &relax).unwrap_or(self.base.population_difference);
        let r = pulsation_weight_r(&relax).unwrap_or(self.base.weight_r);
        self.base.with_population(n0, r)
    }

    /// Poles of the hole profile in the scaled velocity `v/u`.
    pub fn hole_poles(&self, u: f64) -> Vec<Complex64> {
        if self.repump.rate == 0.0 || self.repump.k_r == 0.0 || u == 0.0 {
            return Vec::new();
        }
        let broadening = match self.repump.saturation {
            Some(s) => (1.0 + self.repump.rate / s).sqrt(),
            None => 1.0,
        };
        let half = 0.5 * self.repump.width * broadening;
        let centre = -self.repump.delta_r / (self.repump.k_r * u);
        let h = half / (self.repump.k_r.abs() * u);
        vec![Complex64::new(centre, h)]
    }
}

impl VelocityIntegrand for RepumpIntegrand {
    fn amplitude(&self, delta: f64, v: Velocity) -> Complex64 {
        self.class_model(v.longitudinal)
            .amplitude(delta, self.fields.doppler_shifts(v))
    }

    fn amplitude_transverse_averaged(&self, delta: f64, longitudinal: f64, sigma: f64) -> Complex64 {
        fwm_transverse_averaged(
            &self.class_model(longitudinal),
            &self.fields,
            delta,
            longitudinal,
            sigma,
        )
    }

    fn denominators(&self, delta: f64, out: &mut Vec<LinearDenominator>) {
        fwm_denominators(&self.base, &self.fields, delta, out);
    }
}

/// Doppler-averaged spectrum with the repump acting on each velocity class.
pub fn repump_spectrum(
    grid: &DetuningGrid,
    fields: &FieldConfig,
    relax: &RelaxationParams,
    pump: &PumpSource,
    doppler: &DopplerParams,
    repump: &RepumpParams,
    mode: PumpTermMode,
) -> Result<Spectrum> {
    let integrand = RepumpIntegrand::new(fields, relax, pump, repump, mode)?;
    let poles = integrand.hole_poles(doppler.most_probable_speed(fields));
    let mut spectrum = average_spectrum(grid, &integrand, fields, doppler, mode, &poles)?;
    spectrum.meta.notes.extend(repump.notes());
    Ok(spectrum)
}
