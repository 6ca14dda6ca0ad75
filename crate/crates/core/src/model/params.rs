//! Physical parameter types for the driven two-level system.
//!
//! All rates, detunings and Rabi frequencies are angular frequencies in
//! units of 10⁶ s⁻¹ ("MHz" throughout the crate). Wavenumbers are in rad/µm
//! and velocities in m/s, so a product `k·v` comes out directly in MHz.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite, got {value}")))
    }
}

fn check_non_negative(name: &str, value: f64) -> Result<()> {
    check_finite(name, value)?;
    if value < 0.0 {
        return Err(Error::param(name, format!("must be >= 0, got {value}")));
    }
    Ok(())
}

/// Relaxation rates of the open two-level system.
///
/// Level 1 is the lower (ground) level and level 2 the upper one. Both decay
/// to an external reservoir at their total rates; `gamma21` is the part of
/// the upper-level decay that feeds level 1.
///
/// `gamma21 <= gamma2` is *not* enforced: the linear equations stay well
/// posed without it, and some reference parameter sets violate it. Use
/// [`RelaxationParams::is_physical`] to ask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma21: f64,
    pub gamma_ph: f64,
}

impl RelaxationParams {
    pub fn new(gamma1: f64, gamma2: f64, gamma21: f64, gamma_ph: f64) -> Result<Self> {
        let params = Self {
            gamma1,
            gamma2,
            gamma21,
            gamma_ph,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_non_negative("gamma1", self.gamma1)?;
        check_non_negative("gamma2", self.gamma2)?;
        check_non_negative("gamma21", self.gamma21)?;
        check_non_negative("gamma_ph", self.gamma_ph)
    }

    /// Total coherence decay rate: half the summed level decay plus pure dephasing.
    pub fn dephasing(&self) -> f64 {
        0.5 * (self.gamma1 + self.gamma2) + self.gamma_ph
    }

    /// Whether the upper level feeds the lower one no faster than it decays.
    pub fn is_physical(&self) -> bool {
        self.gamma21 <= self.gamma2
    }

    /// Net loss rate of the upper level that does not return to level 1.
    pub fn effective_upper_loss(&self) -> f64 {
        self.gamma2 - self.gamma21
    }

    /// Both level rates strictly positive, as required by any steady state.
    pub fn require_steady_state(&self) -> Result<()> {
        if self.gamma1 > 0.0 && self.gamma2 > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidRates(format!(
                "gamma1 and gamma2 must be > 0 for a steady state (gamma1 = {}, gamma2 = {})",
                self.gamma1, self.gamma2
            )))
        }
    }
}

/// Incoherent pumping into the two levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSource {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl PumpSource {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        let pump = Self { lambda1, lambda2 };
        pump.validate()?;
        Ok(pump)
    }

    pub fn validate(&self) -> Result<()> {
        check_non_negative("lambda1", self.lambda1)?;
        check_non_negative("lambda2", self.lambda2)
    }

    /// Pumping only into level 1 at rate `gamma1`: unit equilibrium population difference.
    pub fn ground_only(relax: &RelaxationParams) -> Self {
        Self {
            lambda1: relax.gamma1,
            lambda2: 0.0,
        }
    }
}

/// Velocity of one atom class, in m/s.
///
/// `longitudinal` is along the forward pump, `transverse` is in the plane
/// spanned by the pump and probe directions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Velocity {
    pub longitudinal: f64,
    pub transverse: f64,
}

impl Velocity {
    pub const ZERO: Velocity = Velocity {
        longitudinal: 0.0,
        transverse: 0.0,
    };

    pub fn along(longitudinal: f64) -> Self {
        Self {
            longitudinal,
            transverse: 0.0,
        }
    }
}

/// Doppler shifts `k_i·v` (MHz) seen by one velocity class.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DopplerShifts {
    pub forward: f64,
    pub backward: f64,
    pub probe: f64,
}

/// Rabi frequencies, pump detuning and beam geometry.
///
/// The forward pump runs along +z, the backward pump along -z, and the probe
/// is tilted from the forward pump by `theta` in the x–z plane. All three
/// beams share the wavenumber `wavenumber`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldConfig {
    pub omega_f: f64,
    pub omega_b: f64,
    pub omega_p: f64,
    /// Pump detuning from the atomic resonance (MHz).
    pub detuning: f64,
    /// Optical wavenumber (rad/µm).
    pub wavenumber: f64,
    /// Pump–probe angle (rad).
    pub theta: f64,
}

/// Wavenumber of 795 nm light in rad/µm.
pub const DEFAULT_WAVENUMBER: f64 = std::f64::consts::TAU / 0.795;

/// Pump–probe crossing angle used when none is given (rad).
pub const DEFAULT_THETA: f64 = 0.004;

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            omega_f: 1.0,
            omega_b: 1.0,
            omega_p: 1.0,
            detuning: 50.0,
            wavenumber: DEFAULT_WAVENUMBER,
            theta: DEFAULT_THETA,
        }
    }
}

impl FieldConfig {
    pub fn with_detuning(detuning: f64) -> Self {
        Self {
            detuning,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_finite("omega_f", self.omega_f)?;
        check_finite("omega_b", self.omega_b)?;
        check_finite("omega_p", self.omega_p)?;
        check_finite("detuning", self.detuning)?;
        check_finite("wavenumber", self.wavenumber)?;
        if self.wavenumber <= 0.0 {
            return Err(Error::param("wavenumber", "must be > 0"));
        }
        check_finite("theta", self.theta)?;
        if !(0.0..0.1).contains(&self.theta) {
            return Err(Error::param(
                "theta",
                format!("must lie in [0, 0.1) (small-angle geometry), got {}", self.theta),
            ));
        }
        Ok(())
    }

    pub fn doppler_shifts(&self, v: Velocity) -> DopplerShifts {
        let k = self.wavenumber;
        let (sin, cos) = self.theta.sin_cos();
        DopplerShifts {
            forward: k * v.longitudinal,
            backward: -k * v.longitudinal,
            probe: k * (v.longitudinal * cos + v.transverse * sin),
        }
    }

    pub fn rabi_product(&self) -> f64 {
        self.omega_f * self.omega_b * self.omega_p
    }
}

/// Which four-wave-mixing pathways enter the amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum PumpTermMode {
    /// Only the grating written by the forward pump and the probe, read by the backward pump.
    #[serde(rename = "paper")]
    PaperSingleTerm,
    /// Both pump-probe gratings, each read by the opposite pump.
    #[default]
    #[serde(rename = "both-pumps")]
    BothPumps,
}

impl PumpTermMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PumpTermMode::PaperSingleTerm => "paper",
            PumpTermMode::BothPumps => "both-pumps",
        }
    }
}

impl std::str::FromStr for PumpTermMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(PumpTermMode::PaperSingleTerm),
            "both-pumps" => Ok(PumpTermMode::BothPumps),
            other => Err(Error::param(
                "mode",
                format!("expected `paper` or `both-pumps`, got `{other}`"),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_rates_are_rejected() {
        assert!(RelaxationParams::new(-1.0, 1.0, 0.0, 0.0).is_err());
        assert!(RelaxationParams::new(1.0, 1.0, f64::NAN, 0.0).is_err());
        assert!(PumpSource::new(0.0, -0.1).is_err());
    }

    #[test]
    fn feeding_above_decay_is_allowed_but_flagged() {
        let r = RelaxationParams::new(3.0, 0.1, 6.0, 3.0).unwrap();
        assert!(!r.is_physical());
        assert!(RelaxationParams::new(3.0, 6.0, 6.0, 3.0).unwrap().is_physical());
    }

    #[test]
    fn theta_outside_small_angle_range_is_rejected() {
        let mut f = FieldConfig {
            theta: 0.2,
            ..FieldConfig::default()
        };
        assert!(f.validate().is_err());
        f.theta = 0.0;
        f.wavenumber = 0.0;
        assert!(f.validate().is_err());
    }

    #[test]
    fn backward_pump_shift_mirrors_forward() {
        let f = FieldConfig::default();
        let s = f.doppler_shifts(Velocity {
            longitudinal: 120.0,
            transverse: -40.0,
        });
        assert_eq!(s.backward, -s.forward);
        let expected_probe = f.wavenumber * (120.0 * f.theta.cos() - 40.0 * f.theta.sin());
        assert!((s.probe - expected_probe).abs() < 1e-12);
    }

    #[test]
    fn mode_names_round_trip() {
        for mode in [PumpTermMode::PaperSingleTerm, PumpTermMode::BothPumps] {
            assert_eq!(mode.as_str().parse::<PumpTermMode>().unwrap(), mode);
        }
        assert!("single".parse::<PumpTermMode>().is_err());
    }
}
