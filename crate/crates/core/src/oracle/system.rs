//! The driven open two-level system in the frame rotating at the pump frequency.
//!
//! Level 1 sits at zero energy and level 2 at `-Δ`. Each laser field `j`
//! contributes `V21/ħ = -½ Ω_j e^{iφ_j} e^{-iν_j t}`, where `ν_j` is the
//! field's frequency offset from the pump as seen by the moving atom.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FieldConfig, PumpSource, RelaxationParams, Velocity};

/// Populations and the optical coherence of one velocity class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityState {
    pub rho11: f64,
    pub rho22: f64,
    /// Lower-to-upper coherence `ρ21`; `ρ12` is its conjugate.
    pub rho21: Complex64,
}

impl DensityState {
    pub fn rho12(&self) -> Complex64 {
        self.rho21.conj()
    }

    pub fn trace(&self) -> f64 {
        self.rho11 + self.rho22
    }

    pub(crate) fn to_real(self) -> [f64; 4] {
        [self.rho11, self.rho22, self.rho21.re, self.rho21.im]
    }

    pub(crate) fn from_real(y: &[f64]) -> Self {
        Self {
            rho11: y[0],
            rho22: y[1],
            rho21: Complex64::new(y[2], y[3]),
        }
    }
}

/// One monochromatic field seen by the atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tone {
    pub rabi: f64,
    pub phase: f64,
    /// Offset from the pump frequency in the atom frame (MHz).
    pub offset: f64,
}

impl Tone {
    /// Coefficient of `e^{-i ν t}` in `V21/ħ`.
    pub fn coupling(&self) -> Complex64 {
        -0.5 * self.rabi * Complex64::from_polar(1.0, self.phase)
    }
}

/// Forward pump, backward pump and probe as seen by one velocity class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    pub tones: [Tone; 3],
}

impl Drive {
    pub fn new(delta: f64, fields: &FieldConfig, v: Velocity) -> Self {
        let s = fields.doppler_shifts(v);
        let tone = |rabi, offset| Tone {
            rabi,
            phase: 0.0,
            offset,
        };
        Self {
            tones: [
                tone(fields.omega_f, -s.forward),
                tone(fields.omega_b, -s.backward),
                tone(fields.omega_p, delta - s.probe),
            ],
        }
    }

    pub fn with_phases(mut self, phases: [f64; 3]) -> Self {
        for (t, p) in self.tones.iter_mut().zip(phases) {
            t.phase = p;
        }
        self
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for t in &mut self.tones {
            t.rabi *= factor;
        }
        self
    }

    /// `V21/ħ` at time `t`.
    pub fn coupling_at(&self, t: f64) -> Complex64 {
        self.tones
            .iter()
            .map(|tone| tone.coupling() * Complex64::from_polar(1.0, -tone.offset * t))
            .sum()
    }

    /// Offset of the phase-matched signal component, `ν_f + ν_b - ν_p`.
    pub fn signal_offset(&self) -> f64 {
        self.tones[0].offset + self.tones[1].offset - self.tones[2].offset
    }

    pub fn max_rabi(&self) -> f64 {
        self.tones.iter().map(|t| t.rabi.abs()).fold(0.0, f64::max)
    }
}

/// Level structure, relaxation and incoherent pumping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelSystem {
    pub relax: RelaxationParams,
    pub pump: PumpSource,
    pub detuning: f64,
}

impl TwoLevelSystem {
    pub fn new(relax: &RelaxationParams, pump: &PumpSource, detuning: f64) -> Result<Self> {
        relax.validate()?;
        pump.validate()?;
        relax.require_steady_state()?;
        if !detuning.is_finite() {
            return Err(Error::param("detuning", "must be finite"));
        }
        Ok(Self {
            relax: *relax,
            pump: *pump,
            detuning,
        })
    }

    pub fn coherence_decay(&self) -> f64 {
        self.relax.dephasing()
    }

    /// Field-free steady state.
    pub fn equilibrium(&self) -> DensityState {
        let r = &self.relax;
        let rho22 = self.pump.lambda2 / r.gamma2;
        let rho11 = (self.pump.lambda1 + r.gamma21 * rho22) / r.gamma1;
        DensityState {
            rho11,
            rho22,
            rho21: Complex64::new(0.0, 0.0),
        }
    }

    /// Time derivative of the full density matrix under coupling `w = V21/ħ`.
    pub fn derivative(&self, w: Complex64, s: &DensityState) -> DensityState {
        let r = &self.relax;
        let transfer = 2.0 * (w.conj() * s.rho21).im;
        let i = Complex64::i();
        DensityState {
            rho11: transfer - r.gamma1 * s.rho11 + r.gamma21 * s.rho22 + self.pump.lambda1,
            rho22: -transfer - r.gamma2 * s.rho22 + self.pump.lambda2,
            rho21: -i * w * (s.rho11 - s.rho22) + Complex64::new(-self.coherence_decay(), self.detuning) * s.rho21,
        }
    }

    /// Slowest field-free relaxation rate.
    pub fn min_rate(&self) -> f64 {
        self.relax.gamma1.min(self.relax.gamma2).min(self.coherence_decay())
    }
}
