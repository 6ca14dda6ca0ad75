//! Self-consistency suite behind the `check` command: the closed-form
//! amplitude against independent density-matrix solutions, and the
//! velocity average against its known limits.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::CheckConfig;
use crate::doppler::{doppler_average, DopplerParams};
use crate::error::Result;
use crate::model::{
    fwm_amplitude, pulsation_weight_r, spectrum_stationary, DetuningGrid, FieldConfig, PumpSource, PumpTermMode,
    RelaxationParams, Spectrum, Velocity,
};
use crate::oracle::{pulsation_solve, third_order_signal, OracleMethod, TimeDomainOptions};

pub const PULSATION_TOLERANCE: f64 = 1e-12;
pub const ORACLE_TOLERANCE: f64 = 1e-6;
pub const ZERO_WIDTH_TOLERANCE: f64 = 1e-4;
/// Orders whose errors must decrease, and the reference order they are measured against.
pub const ORDER_LADDER: [usize; 3] = [32, 64, 128];
pub const REFERENCE_ORDER: usize = 512;
/// Errors below this are treated as converged to rounding.
const ROUNDING_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    /// Worst observed error (relative).
    pub worst: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }
}

/// One random non-degenerate parameter draw.
#[derive(Debug, Clone, Copy)]
pub struct Draw {
    pub relax: RelaxationParams,
    pub pump: PumpSource,
    pub fields: FieldConfig,
    pub delta: f64,
}

fn signed(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let m = rng.random_range(lo..hi);
    if rng.random_bool(0.5) {
        m
    } else {
        -m
    }
}

/// Rates in [0.1, 10) with |γ2 − γ1| ≥ 0.05, pump detuning 10–100 MHz, probe detuning 1–30 MHz.
pub fn random_draw(rng: &mut ChaCha8Rng) -> Draw {
    loop {
        let relax = RelaxationParams {
            gamma1: rng.random_range(0.1..10.0),
            gamma2: rng.random_range(0.1..10.0),
            gamma21: rng.random_range(0.1..10.0),
            gamma_ph: rng.random_range(0.1..10.0),
        };
        if (relax.gamma2 - relax.gamma1).abs() < 0.05 {
            continue;
        }
        let pump = PumpSource {
            lambda1: rng.random_range(0.5..5.0),
            lambda2: rng.random_range(0.0..2.0),
        };
        let detuning = signed(rng, 10.0, 100.0);
        let fields = FieldConfig {
            omega_f: rng.random_range(0.5..2.0),
            omega_b: rng.random_range(0.5..2.0),
            omega_p: rng.random_range(0.5..2.0),
            ..FieldConfig::with_detuning(detuning)
        };
        let delta = signed(rng, 1.0, 30.0);
        return Draw {
            relax,
            pump,
            fields,
            delta,
        };
    }
}

fn relative(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn item(name: &str, worst: f64, tolerance: f64, detail: String) -> CheckItem {
    CheckItem {
        name: name.into(),
        passed: worst <= tolerance,
        worst,
        tolerance,
        detail,
    }
}

/// Partial-fraction population factor against a direct 2×2 solve.
pub fn check_pulsation_identity(draws: usize, seed: u64) -> Result<CheckItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let d = random_draw(&mut rng);
        let r = pulsation_weight_r(&d.relax)?;
        let s = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let direct = pulsation_solve(d.delta, &d.relax, s)?;
        let fpop =
            (1.0 - r) / Complex64::new(d.delta, d.relax.gamma1) + (1.0 + r) / Complex64::new(d.delta, d.relax.gamma2);
        worst = worst.max(relative(-Complex64::i() * s * fpop, direct));
    }
    Ok(item(
        "pulsation-identity",
        worst,
        PULSATION_TOLERANCE,
        format!("{draws} draws"),
    ))
}

/// Closed form against the order-by-order density-matrix solution, at rest
/// and for a moving class, plus time-domain integration on the first draws.
pub fn check_third_order(draws: usize, time_domain_draws: usize, seed: u64) -> Result<CheckItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut worst_time: f64 = 0.0;
    for n in 0..draws {
        let d = random_draw(&mut rng);
        let moving = Velocity {
            longitudinal: rng.random_range(-50.0..50.0),
            transverse: rng.random_range(-500.0..500.0),
        };
        for v in [Velocity::ZERO, moving] {
            let oracle = third_order_signal(d.delta, &d.fields, &d.relax, &d.pump, v, OracleMethod::HarmonicBalance)?;
            let closed = fwm_amplitude(d.delta, v, &d.fields, &d.relax, &d.pump, PumpTermMode::BothPumps)?;
            worst = worst.max(relative(oracle.coefficient, closed));
        }
        if n < time_domain_draws {
            let method = OracleMethod::TimeDomainExtrapolation(TimeDomainOptions::default());
            let oracle = third_order_signal(d.delta, &d.fields, &d.relax, &d.pump, Velocity::ZERO, method)?;
            let closed = fwm_amplitude(
                d.delta,
                Velocity::ZERO,
                &d.fields,
                &d.relax,
                &d.pump,
                PumpTermMode::BothPumps,
            )?;
            worst_time = worst_time.max(relative(oracle.coefficient, closed));
        }
    }
    Ok(item(
        "third-order-oracle",
        worst.max(worst_time),
        ORACLE_TOLERANCE,
        format!(
            "{draws} draws at rest and in motion, worst harmonic-balance error {worst:.3e}; \
             {} time-domain draws, worst error {worst_time:.3e}",
            time_domain_draws.min(draws)
        ),
    ))
}

/// Rate sets of the reference panels: a narrow central feature and its wide counterpart.
pub fn reference_rate_sets() -> [(&'static str, RelaxationParams); 2] {
    [
        (
            "gamma2=6",
            RelaxationParams {
                gamma1: 3.0,
                gamma2: 6.0,
                gamma21: 6.0,
                gamma_ph: 3.0,
            },
        ),
        (
            "gamma2=0.1",
            RelaxationParams {
                gamma1: 3.0,
                gamma2: 0.1,
                gamma21: 6.0,
                gamma_ph: 3.0,
            },
        ),
    ]
}

fn reference_grid() -> DetuningGrid {
    DetuningGrid::linspace(-150.0, 150.0, 301).expect("fixed grid is valid")
}

fn averaged(relax: &RelaxationParams, mode: PumpTermMode, ku: f64, order: usize) -> Result<Spectrum> {
    let doppler = DopplerParams {
        ku,
        order,
        tolerance: None,
        ..DopplerParams::default()
    };
    doppler_average(
        &reference_grid(),
        &FieldConfig::with_detuning(50.0),
        relax,
        &PumpSource::ground_only(relax),
        &doppler,
        mode,
    )
}

/// Velocity average with a vanishing Doppler width against the stationary spectrum.
pub fn check_zero_width_limit() -> Result<CheckItem> {
    let mut worst: f64 = 0.0;
    for (_, relax) in reference_rate_sets() {
        for mode in [PumpTermMode::PaperSingleTerm, PumpTermMode::BothPumps] {
            let stat = spectrum_stationary(
                &reference_grid(),
                &FieldConfig::with_detuning(50.0),
                &relax,
                &PumpSource::ground_only(&relax),
                mode,
            )?;
            let avg = averaged(&relax, mode, 300e-6, crate::doppler::DEFAULT_ORDER)?;
            worst = worst.max(stat.relative_sup_distance(&avg));
        }
    }
    Ok(item(
        "zero-width-limit",
        worst,
        ZERO_WIDTH_TOLERANCE,
        "ku = 3e-4 MHz against the stationary spectrum, reference rate sets, both modes".into(),
    ))
}

/// Errors at orders 32, 64 and 128 (against order 512) must decrease.
pub fn check_order_convergence() -> Result<CheckItem> {
    let mut lines = Vec::new();
    let mut monotone = true;
    let mut worst_ratio: f64 = 0.0;
    for (label, relax) in reference_rate_sets() {
        for mode in [PumpTermMode::PaperSingleTerm, PumpTermMode::BothPumps] {
            let reference = averaged(&relax, mode, 300.0, REFERENCE_ORDER)?;
            let mut errors = Vec::new();
            for order in ORDER_LADDER {
                errors.push(averaged(&relax, mode, 300.0, order)?.relative_sup_distance(&reference));
            }
            for pair in errors.windows(2) {
                let ok = pair[1] < pair[0] || pair[1] <= ROUNDING_FLOOR;
                monotone &= ok;
                if pair[0] > 0.0 {
                    worst_ratio = worst_ratio.max(pair[1] / pair[0]);
                }
            }
            lines.push(format!(
                "{label} {}: {:.2e} {:.2e} {:.2e}",
                mode.as_str(),
                errors[0],
                errors[1],
                errors[2]
            ));
        }
    }
    Ok(CheckItem {
        name: "order-convergence".into(),
        passed: monotone,
        worst: worst_ratio,
        tolerance: 1.0,
        detail: format!("errors at orders 32/64/128 vs {REFERENCE_ORDER}: {}", lines.join("; ")),
    })
}

pub fn run_checks(config: &CheckConfig) -> Result<CheckReport> {
    Ok(CheckReport {
        items: vec![
            check_pulsation_identity(config.pulsation_draws, config.seed)?,
            check_third_order(
                config.oracle_draws,
                config.time_domain_draws,
                config.seed.wrapping_add(1),
            )?,
            check_zero_width_limit()?,
            check_order_convergence()?,
        ],
    })
}
