//! Maxwell–Boltzmann velocity averaging of the single-class amplitude.
//!
//! Doppler widths are carried as `ku` in MHz; the most probable speed is
//! `u = ku / k`. Quadrature runs in the scaled velocity `x = v/u`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    AmplitudeModel, DetuningGrid, FieldConfig, PumpSource, PumpTermMode, QuadratureDiagnostics, RelaxationParams,
    Spectrum, SpectrumMeta, Velocity,
};
use crate::quadrature::{gauss_hermite, pole_adapted_rule, RuleKind, VelocityRule};

/// How the small transverse part of the probe Doppler shift is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ResidualMode {
    /// Longitudinal velocity only; the probe shift is `k v cosθ`.
    #[default]
    #[serde(rename = "ignore-transverse")]
    IgnoreTransverse,
    /// Longitudinal quadrature, with the transverse spread of the population
    /// beat folded in analytically as a Gaussian of std `kθu/√2`.
    #[serde(rename = "gaussian-broaden")]
    GaussianBroaden,
    /// Product rule over longitudinal and transverse velocity.
    #[serde(rename = "two-dimensional")]
    TwoDimensional,
}

impl ResidualMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ResidualMode::IgnoreTransverse => "ignore-transverse",
            ResidualMode::GaussianBroaden => "gaussian-broaden",
            ResidualMode::TwoDimensional => "two-dimensional",
        }
    }
}

pub const DEFAULT_KU: f64 = 300.0;
pub const DEFAULT_ORDER: usize = 64;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DopplerParams {
    /// Doppler width `k·u` in MHz.
    pub ku: f64,
    pub order: usize,
    pub residual: ResidualMode,
    pub rule: RuleKind,
    /// Relative sup-norm change allowed when the order is doubled; `None` skips the check.
    pub tolerance: Option<f64>,
}

impl Default for DopplerParams {
    fn default() -> Self {
        Self {
            ku: DEFAULT_KU,
            order: DEFAULT_ORDER,
            residual: ResidualMode::IgnoreTransverse,
            rule: RuleKind::PoleAdapted,
            tolerance: Some(DEFAULT_TOLERANCE),
        }
    }
}

impl DopplerParams {
    pub fn with_ku(ku: f64) -> Self {
        Self { ku, ..Self::default() }
    }

    /// Parameters for a most probable speed `u` (m/s) in the given geometry.
    pub fn from_speed(u: f64, fields: &FieldConfig) -> Result<Self> {
        if !(u > 0.0) || !u.is_finite() {
            return Err(Error::InvalidWidth(u));
        }
        Ok(Self::with_ku(u * fields.wavenumber))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.ku.is_finite() || self.ku < 0.0 {
            return Err(Error::param("ku", format!("must be finite and >= 0, got {}", self.ku)));
        }
        if self.order < 4 {
            return Err(Error::param("order", format!("must be >= 4, got {}", self.order)));
        }
        if let Some(tol) = self.tolerance {
            if !(tol > 0.0) {
                return Err(Error::param("tolerance", format!("must be > 0, got {tol}")));
            }
        }
        Ok(())
    }

    /// Most probable speed in m/s.
    pub fn most_probable_speed(&self, fields: &FieldConfig) -> f64 {
        self.ku / fields.wavenumber
    }
}

/// One-dimensional Maxwell density `exp(-v²/u²)/(u√π)`.
pub fn maxwell_weight(v: f64, u: f64) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::InvalidWidth(u));
    }
    let x = v / u;
    Ok((-x * x).exp() / (u * PI.sqrt()))
}

/// A resonance denominator `constant + longitudinal·v_l + transverse·v_t`
/// (MHz, with slopes in MHz per m/s). Used only to place quadrature nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearDenominator {
    pub constant: Complex64,
    pub longitudinal: f64,
    pub transverse: f64,
}

/// Something to be averaged over velocity classes at each probe detuning.
pub trait VelocityIntegrand: Sync {
    fn amplitude(&self, delta: f64, v: Velocity) -> Complex64;

    /// Amplitude with the transverse part of the population beat replaced by
    /// its Gaussian average of std `sigma` (MHz); other transverse shifts dropped.
    fn amplitude_transverse_averaged(&self, delta: f64, longitudinal: f64, sigma: f64) -> Complex64;

    /// Resonance denominators at `delta`, appended to `out`.
    fn denominators(&self, delta: f64, out: &mut Vec<LinearDenominator>);
}

/// The closed-form amplitude as a velocity integrand.
#[derive(Debug, Clone, Copy)]
pub struct FwmIntegrand {
    pub model: AmplitudeModel,
    pub fields: FieldConfig,
}

impl FwmIntegrand {
    pub fn new(fields: &FieldConfig, relax: &RelaxationParams, pump: &PumpSource, mode: PumpTermMode) -> Result<Self> {
        Ok(Self {
            model: AmplitudeModel::new(fields, relax, pump, mode)?,
            fields: *fields,
        })
    }
}

/// Denominators of the closed form for a model and geometry.
pub fn fwm_denominators(model: &AmplitudeModel, fields: &FieldConfig, delta: f64, out: &mut Vec<LinearDenominator>) {
    let k = fields.wavenumber;
    let (sin, cos) = fields.theta.sin_cos();
    let probe = (k * cos, k * sin);
    let grating_slopes: &[f64] = match model.mode {
        PumpTermMode::PaperSingleTerm => &[k],
        PumpTermMode::BothPumps => &[k, -k],
    };
    let g = model.dephasing;
    let d = model.detuning;
    let lin = |c: Complex64, l: f64, t: f64| LinearDenominator {
        constant: c,
        longitudinal: l,
        transverse: t,
    };
    out.push(lin(Complex64::new(delta - d, g), -probe.0, -probe.1));
    out.push(lin(Complex64::new(delta + d, g), -probe.0, -probe.1));
    for &kg in grating_slopes {
        out.push(lin(Complex64::new(-d, g), kg, 0.0));
        for gamma in [model.gamma1, model.gamma2] {
            out.push(lin(Complex64::new(delta, gamma), kg - probe.0, -probe.1));
        }
    }
}

/// Closed-form amplitude with broadened population factor, shared with repump.
pub(crate) fn fwm_transverse_averaged(
    model: &AmplitudeModel,
    fields: &FieldConfig,
    delta: f64,
    longitudinal: f64,
    sigma: f64,
) -> Complex64 {
    let shifts = fields.doppler_shifts(Velocity::along(longitudinal));
    let term = |grating: f64| {
        let parts = model.pathway_parts(delta, grating, shifts.probe);
        parts.coherent * model.population_factor_broadened(parts.beat, sigma)
    };
    match model.mode {
        PumpTermMode::PaperSingleTerm => term(shifts.forward),
        PumpTermMode::BothPumps => term(shifts.forward) + term(shifts.backward),
    }
}

impl VelocityIntegrand for FwmIntegrand {
    fn amplitude(&self, delta: f64, v: Velocity) -> Complex64 {
        self.model.amplitude(delta, self.fields.doppler_shifts(v))
    }

    fn amplitude_transverse_averaged(&self, delta: f64, longitudinal: f64, sigma: f64) -> Complex64 {
        fwm_transverse_averaged(&self.model, &self.fields, delta, longitudinal, sigma)
    }

    fn denominators(&self, delta: f64, out: &mut Vec<LinearDenominator>) {
        fwm_denominators(&self.model, &self.fields, delta, out);
    }
}

struct Averager<'a, I: VelocityIntegrand> {
    integrand: &'a I,
    doppler: DopplerParams,
    u: f64,
    sigma: f64,
    fixed_poles: &'a [Complex64],
    hermite: Option<VelocityRule>,
}

impl<'a, I: VelocityIntegrand> Averager<'a, I> {
    fn new(integrand: &'a I, fields: &FieldConfig, doppler: DopplerParams, fixed_poles: &'a [Complex64]) -> Self {
        let hermite = match doppler.rule {
            RuleKind::GaussHermite => Some(gauss_hermite(doppler.order)),
            RuleKind::PoleAdapted => None,
        };
        Self {
            integrand,
            doppler,
            u: doppler.most_probable_speed(fields),
            sigma: doppler.ku * fields.theta.sin() / SQRT_2,
            fixed_poles,
            hermite,
        }
    }

    fn rule(&self, poles: &[Complex64]) -> VelocityRule {
        match &self.hermite {
            Some(rule) => rule.clone(),
            None => pole_adapted_rule(poles, self.doppler.order),
        }
    }

    fn longitudinal_poles(&self, dens: &[LinearDenominator]) -> Vec<Complex64> {
        let mut poles: Vec<Complex64> = dens
            .iter()
            .filter(|d| d.longitudinal != 0.0)
            .map(|d| -d.constant / (d.longitudinal * self.u))
            .collect();
        poles.extend_from_slice(self.fixed_poles);
        poles
    }

    /// Averaged amplitude at one detuning and the number of velocity nodes used.
    fn average_at(&self, delta: f64) -> (Complex64, usize) {
        if self.doppler.ku == 0.0 {
            return (self.integrand.amplitude(delta, Velocity::ZERO), 1);
        }
        let mut dens = Vec::new();
        self.integrand.denominators(delta, &mut dens);
        let outer = self.rule(&self.longitudinal_poles(&dens));
        match self.doppler.residual {
            ResidualMode::IgnoreTransverse => {
                let sum = outer
                    .iter()
                    .map(|(x, w)| w * self.integrand.amplitude(delta, Velocity::along(self.u * x)))
                    .sum();
                (sum, outer.len())
            }
            ResidualMode::GaussianBroaden => {
                let sum = outer
                    .iter()
                    .map(|(x, w)| {
                        w * self
                            .integrand
                            .amplitude_transverse_averaged(delta, self.u * x, self.sigma)
                    })
                    .sum();
                (sum, outer.len())
            }
            ResidualMode::TwoDimensional => {
                let mut total = Complex64::new(0.0, 0.0);
                let mut nodes = 0;
                for (x, wx) in outer.iter() {
                    let vl = self.u * x;
                    let poles: Vec<Complex64> = dens
                        .iter()
                        .filter(|d| d.transverse != 0.0)
                        .map(|d| -(d.constant + d.longitudinal * vl) / (d.transverse * self.u))
                        .collect();
                    let inner = self.rule(&poles);
                    let row: Complex64 = inner
                        .iter()
                        .map(|(y, wy)| {
                            wy * self.integrand.amplitude(
                                delta,
                                Velocity {
                                    longitudinal: vl,
                                    transverse: self.u * y,
                                },
                            )
                        })
                        .sum();
                    total += wx * row;
                    nodes += inner.len();
                }
                (total, nodes)
            }
        }
    }
}

/// Averaged amplitudes at the configured order, without a convergence check.
///
/// `fixed_poles` are extra poles in the scaled longitudinal velocity that the
/// rule must resolve at every detuning, e.g. a velocity-selective hole.
pub fn average_amplitudes<I: VelocityIntegrand>(
    grid: &DetuningGrid,
    integrand: &I,
    fields: &FieldConfig,
    doppler: &DopplerParams,
    fixed_poles: &[Complex64],
) -> Result<(Vec<Complex64>, usize)> {
    doppler.validate()?;
    let averager = Averager::new(integrand, fields, *doppler, fixed_poles);
    let results: Vec<(Complex64, usize)> = grid
        .values()
        .par_iter()
        .map(|&delta| averager.average_at(delta))
        .collect();
    let max_nodes = results.iter().map(|r| r.1).max().unwrap_or(0);
    let amplitudes: Vec<Complex64> = results.into_iter().map(|r| r.0).collect();
    if let Some(bad) = amplitudes.iter().position(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(Error::NonFiniteResidual(format!(
            "velocity average is not finite at delta = {}",
            grid.values()[bad]
        )));
    }
    Ok((amplitudes, max_nodes))
}

/// Velocity-averaged spectrum of an arbitrary integrand, with the doubling check.
pub fn average_spectrum<I: VelocityIntegrand>(
    grid: &DetuningGrid,
    integrand: &I,
    fields: &FieldConfig,
    doppler: &DopplerParams,
    mode: PumpTermMode,
    fixed_poles: &[Complex64],
) -> Result<Spectrum> {
    let (amplitudes, max_nodes) = average_amplitudes(grid, integrand, fields, doppler, fixed_poles)?;
    let mut meta = SpectrumMeta::stationary(mode);
    meta.velocity_averaged = true;
    let mut spectrum = Spectrum::from_amplitudes(grid, &amplitudes, meta.clone());
    let mut doubling_change = None;
    if let Some(tolerance) = doppler.tolerance {
        if doppler.ku > 0.0 {
            let doubled = DopplerParams {
                order: doppler.order * 2,
                ..*doppler
            };
            let (fine, _) = average_amplitudes(grid, integrand, fields, &doubled, fixed_poles)?;
            let fine = Spectrum::from_amplitudes(grid, &fine, meta);
            let change = spectrum.relative_sup_distance(&fine);
            if !(change <= tolerance) {
                return Err(Error::QuadratureNotConverged { change, tolerance });
            }
            doubling_change = Some(change);
        }
    }
    spectrum.meta.quadrature = Some(QuadratureDiagnostics {
        rule: doppler.rule.as_str().to_string(),
        order: doppler.order,
        residual_mode: doppler.residual.as_str().to_string(),
        max_nodes,
        doubling_change,
    });
    Ok(spectrum)
}

/// Maxwell-averaged spectrum of the closed-form amplitude.
pub fn doppler_average(
    grid: &DetuningGrid,
    fields: &FieldConfig,
    relax: &RelaxationParams,
    pump: &PumpSource,
    doppler: &DopplerParams,
    mode: PumpTermMode,
) -> Result<Spectrum> {
    let integrand = FwmIntegrand::new(fields, relax, pump, mode)?;
    average_spectrum(grid, &integrand, fields, doppler, mode, &[])
}
