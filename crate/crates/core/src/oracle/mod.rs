//! Brute-force density-matrix solvers that check the closed-form amplitude
//! without using it.

mod harmonic;
pub mod ode;
mod pulsation;
mod system;
mod time_domain;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{FieldConfig, PumpSource, RelaxationParams, Velocity};

pub use harmonic::{solve_third_order, HarmonicSolution, SIGNAL_MODE};
pub use pulsation::{pulsation_solve, CONDITION_LIMIT};
pub use system::{DensityState, Drive, Tone, TwoLevelSystem};
pub use time_domain::{
    common_base_frequency, evolve, extrapolate_third_order, periodic_signal_coefficient, transient_duration,
    LadderResult, TimeDomainOptions,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleMethod {
    HarmonicBalance,
    TimeDomainExtrapolation(TimeDomainOptions),
}

impl OracleMethod {
    pub fn name(&self) -> &'static str {
        match self {
            OracleMethod::HarmonicBalance => "harmonic-balance",
            OracleMethod::TimeDomainExtrapolation(_) => "time-domain-extrapolation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Convergence {
    Harmonic {
        order: usize,
        modes_solved: usize,
        max_condition: f64,
    },
    Ladder {
        scales: Vec<f64>,
        rungs: Vec<Complex64>,
        integration_steps: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Signal amplitude on the scale of the closed-form amplitude with both pump terms.
    pub coefficient: Complex64,
    /// Third-order ρ21 of the phase-matched signal harmonic.
    pub rho21: Complex64,
    pub method: String,
    pub convergence: Convergence,
    pub estimated_error: f64,
}

/// Maps the signal-harmonic ρ21 onto the closed-form amplitude convention.
///
/// The closed form is written for ρ12 (hence the conjugate) and carries
/// `-1/4` where the density matrix carries `1/8` from the three `½Ω` couplings.
pub fn amplitude_from_coherence(rho21: Complex64) -> Complex64 {
    -2.0 * rho21.conj()
}

/// Third-order phase-matched signal for one velocity class.
pub fn third_order_signal(
    delta: f64,
    fields: &FieldConfig,
    relax: &RelaxationParams,
    pump: &PumpSource,
    v: Velocity,
    method: OracleMethod,
) -> Result<OracleResult> {
    fields.validate()?;
    let sys = TwoLevelSystem::new(relax, pump, fields.detuning)?;
    let drive = Drive::new(delta, fields, v);
    match method {
        OracleMethod::HarmonicBalance => {
            let sol = solve_third_order(&sys, &drive)?;
            Ok(OracleResult {
                coefficient: amplitude_from_coherence(sol.rho21),
                rho21: sol.rho21,
                method: method.name().into(),
                estimated_error: sol.max_condition * f64::EPSILON,
                convergence: Convergence::Harmonic {
                    order: 3,
                    modes_solved: sol.modes_solved,
                    max_condition: sol.max_condition,
                },
            })
        }
        OracleMethod::TimeDomainExtrapolation(opts) => {
            let ladder = extrapolate_third_order(&sys, &drive, &opts)?;
            Ok(OracleResult {
                coefficient: amplitude_from_coherence(ladder.rho21),
                rho21: ladder.rho21,
                method: method.name().into(),
                estimated_error: ladder.estimated_error,
                convergence: Convergence::Ladder {
                    scales: ladder.scales,
                    rungs: ladder.rungs,
                    integration_steps: ladder.steps,
                },
            })
        }
    }
}
