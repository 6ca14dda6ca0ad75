//! Third-order signal from direct time integration of the full (all-order)
//! density-matrix equations at several field strengths and spatial phases.
//!
//! For periodic drives the periodic steady state is found by shooting: one
//! period is integrated for the particular solution and for the four unit
//! initial deviations, and the fixed point `z* = (I - Φ)⁻¹ z_p(T)` is solved
//! exactly. The signal harmonic is demodulated along the way by accumulator
//! components. The phase-matched part is isolated by a discrete Fourier
//! transform over the pump phases, and the field dependence is removed by
//! polynomial extrapolation in the squared field strength.

use std::f64::consts::TAU;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;

use super::ode::{integrate, OdeOptions};
use super::pulsation::CONDITION_LIMIT;
use super::system::{DensityState, Drive, TwoLevelSystem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDomainOptions {
    /// Largest Rabi frequency of the ladder relative to the slowest relaxation rate.
    pub top_field_fraction: f64,
    /// Number of field strengths (≥ 3).
    pub rungs: usize,
    /// Ratio between successive field strengths, in (0, 1).
    pub ratio: f64,
    /// Phase samples per pump (≥ 4).
    pub phase_samples: usize,
    pub ode: OdeOptions,
    /// Relative error target of the extrapolated coefficient.
    pub target: f64,
}

impl Default for TimeDomainOptions {
    fn default() -> Self {
        Self {
            top_field_fraction: 0.2,
            rungs: 4,
            ratio: 0.5,
            phase_samples: 4,
            ode: OdeOptions::default(),
            target: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderResult {
    /// Third-order ρ21 in the signal mode, per unit field cube, for the drive's own fields.
    pub rho21: Complex64,
    /// Absolute field scale factors used.
    pub scales: Vec<f64>,
    /// Raw `c(ε)/ε³` at each rung.
    pub rungs: Vec<Complex64>,
    pub estimated_error: f64,
    pub steps: usize,
}

/// Smallest frequency of which every nonzero tone offset is an integer multiple.
pub fn common_base_frequency(offsets: &[f64]) -> Option<f64> {
    let nonzero: Vec<f64> = offsets.iter().map(|f| f.abs()).filter(|&f| f > 1e-12).collect();
    let smallest = nonzero.iter().copied().fold(f64::INFINITY, f64::min);
    if !smallest.is_finite() {
        return None;
    }
    (1..=64).find_map(|q| {
        let base = smallest / q as f64;
        nonzero
            .iter()
            .all(|&f| {
                let ratio = f / base;
                ratio.round() <= 4096.0 && (ratio - ratio.round()).abs() <= 1e-9 * ratio
            })
            .then_some(base)
    })
}

/// Integrates the full equations from `initial` over `[t0, t1]`.
pub fn evolve(
    sys: &TwoLevelSystem,
    drive: &Drive,
    initial: DensityState,
    t0: f64,
    t1: f64,
    opts: &OdeOptions,
) -> Result<DensityState> {
    let mut y = initial.to_real();
    integrate(
        |t, y, dy| {
            let d = sys.derivative(drive.coupling_at(t), &DensityState::from_real(y));
            dy.copy_from_slice(&d.to_real());
        },
        t0,
        t1,
        &mut y,
        opts,
    )?;
    Ok(DensityState::from_real(&y))
}

/// Components per trajectory: deviation (4 reals) plus demodulation accumulator (2 reals).
const STRIDE: usize = 6;

/// Signal-harmonic coefficient of ρ21 in the periodic steady state.
pub fn periodic_signal_coefficient(
    sys: &TwoLevelSystem,
    drive: &Drive,
    opts: &OdeOptions,
) -> Result<(Complex64, usize)> {
    let offsets: Vec<f64> = drive.tones.iter().map(|t| t.offset).collect();
    let base = common_base_frequency(&offsets).ok_or_else(|| {
        Error::param(
            "delta",
            "time-domain extraction needs a periodic drive: nonzero, commensurate field offsets",
        )
    })?;
    let period = TAU / base;
    let signal = drive.signal_offset();
    let n0 = {
        let eq = sys.equilibrium();
        eq.rho11 - eq.rho22
    };
    let r = sys.relax;
    let gamma = sys.coherence_decay();
    let detuning = sys.detuning;

    // trajectory 0: particular solution from zero deviation; 1..=4: homogeneous unit columns
    let mut y = vec![0.0; 5 * STRIDE];
    for k in 0..4 {
        y[(k + 1) * STRIDE + k] = 1.0;
    }
    let i = Complex64::i();
    let stats = integrate(
        |t, y, dy| {
            let w = drive.coupling_at(t);
            let demod = Complex64::from_polar(1.0, signal * t);
            for traj in 0..5 {
                let o = traj * STRIDE;
                let (z11, z22) = (y[o], y[o + 1]);
                let c = Complex64::new(y[o + 2], y[o + 3]);
                let transfer = 2.0 * (w.conj() * c).im;
                let forcing = if traj == 0 { n0 } else { 0.0 };
                let dc = -i * w * (forcing + z11 - z22) + Complex64::new(-gamma, detuning) * c;
                let acc = c * demod;
                dy[o] = transfer - r.gamma1 * z11 + r.gamma21 * z22;
                dy[o + 1] = -transfer - r.gamma2 * z22;
                dy[o + 2] = dc.re;
                dy[o + 3] = dc.im;
                dy[o + 4] = acc.re;
                dy[o + 5] = acc.im;
            }
        },
        0.0,
        period,
        &mut y,
        opts,
    )?;

    let state = |traj: usize| Vector4::from_iterator(y[traj * STRIDE..traj * STRIDE + 4].iter().copied());
    let accum = |traj: usize| Complex64::new(y[traj * STRIDE + 4], y[traj * STRIDE + 5]);
    let monodromy = Matrix4::from_columns(&[state(1), state(2), state(3), state(4)]);
    let system = Matrix4::identity() - monodromy;
    let sv = system.svd(false, false).singular_values;
    let condition = if sv.min() == 0.0 {
        f64::INFINITY
    } else {
        sv.max() / sv.min()
    };
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::SingularSystem {
            condition,
            limit: CONDITION_LIMIT,
        });
    }
    let fixed = system.lu().solve(&state(0)).ok_or(Error::SingularSystem {
        condition: f64::INFINITY,
        limit: CONDITION_LIMIT,
    })?;
    let mut total = accum(0);
    for k in 0..4 {
        total += fixed[k] * accum(k + 1);
    }
    Ok((total / period, stats.accepted + stats.rejected))
}

/// Phase-matched signal coefficient at one field scale, by a DFT over pump phases.
fn phase_matched(sys: &TwoLevelSystem, drive: &Drive, opts: &TimeDomainOptions) -> Result<(Complex64, usize)> {
    let m = opts.phase_samples;
    let jobs: Vec<(usize, usize)> = (0..m).flat_map(|a| (0..m).map(move |b| (a, b))).collect();
    let results: Vec<Result<(Complex64, usize)>> = jobs
        .par_iter()
        .map(|&(a, b)| {
            let pf = TAU * a as f64 / m as f64;
            let pb = TAU * b as f64 / m as f64;
            let d = drive.with_phases([pf, pb, 0.0]);
            periodic_signal_coefficient(sys, &d, &opts.ode)
                .map(|(c, steps)| (c * Complex64::from_polar(1.0, -(pf + pb)), steps))
        })
        .collect();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut steps = 0;
    for r in results {
        let (c, s) = r?;
        sum += c;
        steps += s;
    }
    Ok((sum / (m * m) as f64, steps))
}

/// Third-order signal coefficient extrapolated to vanishing field strength.
pub fn extrapolate_third_order(sys: &TwoLevelSystem, drive: &Drive, opts: &TimeDomainOptions) -> Result<LadderResult> {
    if opts.phase_samples < 4 {
        return Err(Error::param("phase_samples", "need at least 4 phase samples"));
    }
    if opts.rungs < 3 {
        return Err(Error::param("rungs", "need at least 3 field strengths"));
    }
    if !(opts.ratio > 0.0 && opts.ratio < 1.0) {
        return Err(Error::param("ratio", "must lie in (0, 1)"));
    }
    let peak = drive.max_rabi();
    if peak == 0.0 || drive.tones.iter().any(|t| t.rabi == 0.0) {
        return Ok(LadderResult {
            rho21: Complex64::new(0.0, 0.0),
            scales: Vec::new(),
            rungs: Vec::new(),
            estimated_error: 0.0,
            steps: 0,
        });
    }
    let top = opts.top_field_fraction * sys.min_rate() / peak;
    let scales: Vec<f64> = (0..opts.rungs).map(|i| top * opts.ratio.powi(i as i32)).collect();
    let mut rungs = Vec::with_capacity(scales.len());
    let mut steps = 0;
    for &s in &scales {
        let (c, n) = phase_matched(sys, &drive.scaled(s), opts)?;
        rungs.push(c / (s * s * s));
        steps += n;
    }
    // c(ε)/ε³ = c3 + c5 ε² + c7 ε⁴ + ...: polynomial extrapolation in ε² to zero
    let squares: Vec<f64> = scales.iter().map(|s| s * s).collect();
    let n = rungs.len();
    let r2 = extrapolate_to_zero(&squares, &rungs);
    let without_coarsest = extrapolate_to_zero(&squares[1..], &rungs[1..]);
    let without_finest = extrapolate_to_zero(&squares[..n - 1], &rungs[..n - 1]);
    let spread = (r2 - without_coarsest).norm().max((r2 - without_finest).norm());
    let scale = r2.norm();
    let estimated_error = if scale > 0.0 { spread / scale } else { spread };
    if !(estimated_error <= opts.target) {
        return Err(Error::NotConverged {
            estimate: estimated_error,
            target: opts.target,
        });
    }
    Ok(LadderResult {
        rho21: r2,
        scales,
        rungs,
        estimated_error,
        steps,
    })
}

/// Neville evaluation at `x = 0` of the interpolating polynomial through `(x_i, y_i)`.
fn extrapolate_to_zero(x: &[f64], y: &[Complex64]) -> Complex64 {
    let mut t = y.to_vec();
    for k in 1..t.len() {
        for i in (k..t.len()).rev() {
            t[i] = (x[i - k] * t[i] - x[i] * t[i - 1]) / (x[i - k] - x[i]);
        }
    }
    t[t.len() - 1]
}

/// Duration after which initial conditions are forgotten to about `e^{-25}`.
pub fn transient_duration(sys: &TwoLevelSystem) -> f64 {
    25.0 / sys.min_rate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FieldConfig, PumpSource, RelaxationParams, Velocity};

    #[test]
    fn base_frequency_of_commensurate_offsets() {
        assert_eq!(common_base_frequency(&[0.0, 0.0, 5.0]), Some(5.0));
        let b = common_base_frequency(&[3.0, -3.0, 4.5]).unwrap();
        assert!((b - 1.5).abs() < 1e-12);
        assert_eq!(common_base_frequency(&[0.0, 0.0, 0.0]), None);
        assert_eq!(common_base_frequency(&[1.0, std::f64::consts::PI]), None);
    }

    #[test]
    fn neville_recovers_even_polynomials() {
        let x = [1.0, 0.25, 0.0625, 0.015625];
        let y: Vec<Complex64> = x
            .iter()
            .map(|&t| Complex64::new(2.0 + 3.0 * t - t * t, -1.0 + t * t * t))
            .collect();
        let z = extrapolate_to_zero(&x, &y);
        assert!((z - Complex64::new(2.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn periodic_state_is_a_fixed_point() {
        let r = RelaxationParams::new(3.0, 6.0, 6.0, 3.0).unwrap();
        let sys = TwoLevelSystem::new(&r, &PumpSource::ground_only(&r), 20.0).unwrap();
        let f = FieldConfig {
            omega_f: 0.5,
            omega_b: 0.4,
            omega_p: 0.3,
            ..FieldConfig::with_detuning(20.0)
        };
        let drive = Drive::new(5.0, &f, Velocity::ZERO);
        let opts = OdeOptions::default();
        // long transient then one more period: demodulated coefficient should match shooting
        let start = evolve(&sys, &drive, sys.equilibrium(), 0.0, 40.0 * TAU / 5.0, &opts).unwrap();
        let after = evolve(&sys, &drive, start, 40.0 * TAU / 5.0, 41.0 * TAU / 5.0, &opts).unwrap();
        assert!((after.rho11 - start.rho11).abs() < 1e-9);
        assert!((after.rho21 - start.rho21).norm() < 1e-9);
    }
}
