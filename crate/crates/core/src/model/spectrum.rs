use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::amplitude::AmplitudeModel;
use super::params::{FieldConfig, PumpSource, PumpTermMode, RelaxationParams, Velocity};
use crate::error::{Error, Result};

/// Strictly increasing probe-detuning grid (MHz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DetuningGrid(Vec<f64>);

impl DetuningGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite value {bad}")));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "not strictly increasing at index {}: {} then {}",
                i + 1,
                values[i],
                values[i + 1]
            )));
        }
        Ok(Self(values))
    }

    /// `points` equally spaced values from `start` to `stop` inclusive.
    pub fn linspace(start: f64, stop: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {points}")));
        }
        let step = (stop - start) / (points - 1) as f64;
        Self::new((0..points).map(|i| start + step * i as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for DetuningGrid {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<DetuningGrid> for Vec<f64> {
    fn from(grid: DetuningGrid) -> Self {
        grid.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub delta: f64,
    pub amplitude: Complex64,
    pub intensity: f64,
}

impl SpectrumPoint {
    pub fn new(delta: f64, amplitude: Complex64) -> Self {
        Self {
            delta,
            amplitude,
            intensity: amplitude.norm_sqr(),
        }
    }
}

/// Quadrature bookkeeping attached to velocity-averaged spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureDiagnostics {
    pub rule: String,
    pub order: usize,
    pub residual_mode: String,
    /// Largest number of velocity nodes used at any grid point.
    pub max_nodes: usize,
    /// Relative sup-norm change in intensity when the order is doubled, if checked.
    pub doubling_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub mode: PumpTermMode,
    pub velocity_averaged: bool,
    pub quadrature: Option<QuadratureDiagnostics>,
    /// Free-form notes, e.g. phenomenological repump settings.
    pub notes: Vec<String>,
}

impl SpectrumMeta {
    pub fn stationary(mode: PumpTermMode) -> Self {
        Self {
            mode,
            velocity_averaged: false,
            quadrature: None,
            notes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub points: Vec<SpectrumPoint>,
    pub meta: SpectrumMeta,
}

impl Spectrum {
    pub fn from_amplitudes(grid: &DetuningGrid, amplitudes: &[Complex64], meta: SpectrumMeta) -> Self {
        debug_assert_eq!(grid.len(), amplitudes.len());
        let points = grid
            .values()
            .iter()
            .zip(amplitudes)
            .map(|(&delta, &a)| SpectrumPoint::new(delta, a))
            .collect();
        Self { points, meta }
    }

    /// Spectrum carrying only intensities, e.g. measured data. Amplitudes are
    /// set to `sqrt(intensity)` with zero phase.
    pub fn from_intensities(deltas: &[f64], intensities: &[f64]) -> Result<Self> {
        let grid = DetuningGrid::new(deltas.to_vec())?;
        if deltas.len() != intensities.len() {
            return Err(Error::InvalidGrid(format!(
                "{} detunings but {} intensities",
                deltas.len(),
                intensities.len()
            )));
        }
        let points = grid
            .values()
            .iter()
            .zip(intensities)
            .map(|(&delta, &intensity)| SpectrumPoint {
                delta,
                amplitude: Complex64::new(intensity.max(0.0).sqrt(), 0.0),
                intensity,
            })
            .collect();
        Ok(Self {
            points,
            meta: SpectrumMeta::stationary(PumpTermMode::BothPumps),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.delta).collect()
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.intensity).collect()
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        self.points.iter().map(|p| p.amplitude).collect()
    }

    pub fn max_intensity(&self) -> f64 {
        self.points.iter().map(|p| p.intensity).fold(0.0, f64::max)
    }

    /// Largest intensity difference relative to the larger of the two maxima.
    pub fn relative_sup_distance(&self, other: &Spectrum) -> f64 {
        let scale = self.max_intensity().max(other.max_intensity());
        let sup = self
            .points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| (a.intensity - b.intensity).abs())
            .fold(0.0, f64::max);
        if scale > 0.0 {
            sup / scale
        } else {
            sup
        }
    }
}

/// Spectrum of atoms at rest.
pub fn spectrum_stationary(
    grid: &DetuningGrid,
    fields: &FieldConfig,
    relax: &RelaxationParams,
    pump: &PumpSource,
    mode: PumpTermMode,
) -> Result<Spectrum> {
    let model = AmplitudeModel::new(fields, relax, pump, mode)?;
    let shifts = fields.doppler_shifts(Velocity::ZERO);
    let amplitudes: Vec<Complex64> = grid
        .values()
        .par_iter()
        .map(|&delta| model.amplitude(delta, shifts))
        .collect();
    Ok(Spectrum::from_amplitudes(
        grid,
        &amplitudes,
        SpectrumMeta::stationary(mode),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_must_increase_strictly() {
        assert!(DetuningGrid::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(DetuningGrid::new(vec![]).is_err());
        assert!(DetuningGrid::new(vec![0.0, f64::INFINITY]).is_err());
        let g = DetuningGrid::linspace(-1.0, 1.0, 5).unwrap();
        assert_eq!(g.values(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn intensity_is_squared_modulus() {
        let relax = RelaxationParams::new(3.0, 6.0, 6.0, 3.0).unwrap();
        let grid = DetuningGrid::linspace(-100.0, 100.0, 101).unwrap();
        let s = spectrum_stationary(
            &grid,
            &FieldConfig::with_detuning(50.0),
            &relax,
            &PumpSource::ground_only(&relax),
            PumpTermMode::BothPumps,
        )
        .unwrap();
        for p in &s.points {
            assert_eq!(p.intensity, p.amplitude.norm_sqr());
            assert!(p.intensity >= 0.0);
        }
    }

    #[test]
    fn degenerate_rates_propagate() {
        let relax = RelaxationParams::new(3.0, 3.0, 1.0, 3.0).unwrap();
        let grid = DetuningGrid::linspace(-1.0, 1.0, 3).unwrap();
        let err = spectrum_stationary(
            &grid,
            &FieldConfig::default(),
            &relax,
            &PumpSource::ground_only(&relax),
            PumpTermMode::BothPumps,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateRates { .. }));
    }
}
