//! Relaxation-rate extraction by damped least squares on intensity spectra.
//!
//! Positive quantities (rates, amplitude scale, Doppler width) are optimised
//! in log space, the pump detuning linearly. Bounds are enforced by
//! projection. Several perturbed starts run in parallel and the best result
//! is kept.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::doppler::{doppler_average, DopplerParams};
use crate::error::{Error, Result};
use crate::model::{
    spectrum_stationary, DetuningGrid, FieldConfig, PumpSource, PumpTermMode, RelaxationParams, Spectrum,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitParam {
    Gamma1,
    Gamma2,
    Gamma21,
    GammaPh,
    Detuning,
    Scale,
    Ku,
}

impl FitParam {
    pub fn name(&self) -> &'static str {
        match self {
            FitParam::Gamma1 => "gamma1",
            FitParam::Gamma2 => "gamma2",
            FitParam::Gamma21 => "gamma21",
            FitParam::GammaPh => "gamma_ph",
            FitParam::Detuning => "detuning",
            FitParam::Scale => "scale",
            FitParam::Ku => "ku",
        }
    }

    fn log_space(&self) -> bool {
        !matches!(self, FitParam::Detuning)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeParam {
    pub param: FitParam,
    pub initial: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop once the projected gradient norm falls below this fraction of its initial value.
    pub gradient_tolerance: f64,
    /// Forward-difference step relative to each internal coordinate.
    pub relative_step: f64,
    pub starts: usize,
    pub seed: u64,
    /// Standard deviation of start perturbations in internal coordinates
    /// (log units for positive parameters, fraction of |initial| for the detuning).
    pub start_spread: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            gradient_tolerance: 1e-8,
            relative_step: 1e-6,
            starts: 5,
            seed: 0,
            start_spread: 0.1,
        }
    }
}

/// Everything needed to evaluate the forward model plus the data to match.
#[derive(Debug, Clone, PartialEq)]
pub struct FitProblem {
    pub data: Spectrum,
    pub fields: FieldConfig,
    pub relax: RelaxationParams,
    pub pump: PumpSource,
    pub mode: PumpTermMode,
    /// Velocity averaging; `None` fits the stationary spectrum.
    pub doppler: Option<DopplerParams>,
    /// Amplitude scale applied to the model intensity when `scale` is not free.
    pub scale: f64,
    pub free: Vec<FreeParam>,
    pub options: FitOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub param: FitParam,
    pub value: f64,
    /// Diagonal of JᵀJ in internal coordinates.
    pub sensitivity: f64,
    /// Sensitivity below 1e-6 of the largest one.
    pub weakly_identified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub rss: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub estimates: Vec<ParamEstimate>,
    pub rss: f64,
    pub initial_rss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub initial_gradient_norm: f64,
    pub best_start: usize,
    pub starts: Vec<StartSummary>,
}

impl FitResult {
    pub fn value(&self, param: FitParam) -> Option<f64> {
        self.estimates.iter().find(|e| e.param == param).map(|e| e.value)
    }
}

/// Relative size below which a sensitivity is flagged.
pub const WEAK_SENSITIVITY: f64 = 1e-6;

impl FitProblem {
    pub fn validate(&self) -> Result<()> {
        if self.free.is_empty() {
            return Err(Error::InvalidFitProblem("no free parameters".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for f in &self.free {
            let name = f.param.name();
            if !seen.insert(f.param) {
                return Err(Error::InvalidFitProblem(format!("`{name}` listed twice")));
            }
            if !(f.lower.is_finite() && f.upper.is_finite() && f.lower < f.upper) {
                return Err(Error::InvalidFitProblem(format!(
                    "`{name}` needs finite bounds with lower < upper"
                )));
            }
            if !(f.lower <= f.initial && f.initial <= f.upper) {
                return Err(Error::InvalidFitProblem(format!(
                    "`{name}` initial value {} outside [{}, {}]",
                    f.initial, f.lower, f.upper
                )));
            }
            if f.param.log_space() && (f.lower < 0.0 || f.initial <= 0.0) {
                return Err(Error::InvalidFitProblem(format!(
                    "`{name}` must have lower >= 0 and a positive initial value"
                )));
            }
            if f.param == FitParam::Ku && self.doppler.is_none() {
                return Err(Error::InvalidFitProblem(
                    "`ku` is free but Doppler averaging is off".into(),
                ));
            }
        }
        let needed = 2 * self.free.len();
        if self.data.len() < needed {
            return Err(Error::InvalidFitProblem(format!(
                "{} data points for {} free parameters; need at least {needed}",
                self.data.len(),
                self.free.len()
            )));
        }
        if self.data.points.iter().any(|p| !p.intensity.is_finite()) {
            return Err(Error::InvalidFitProblem("data contain non-finite intensities".into()));
        }
        if !(self.scale > 0.0) {
            return Err(Error::InvalidFitProblem("fixed scale must be > 0".into()));
        }
        Ok(())
    }

    fn grid(&self) -> Result<DetuningGrid> {
        DetuningGrid::new(self.data.deltas())
    }

    /// Model intensities at physical parameter values (ordered as `free`).
    pub fn model_intensities(&self, values: &[f64]) -> Result<Vec<f64>> {
        let mut relax = self.relax;
        let mut fields = self.fields;
        let mut scale = self.scale;
        let mut doppler = self.doppler;
        for (f, &v) in self.free.iter().zip(values) {
            match f.param {
                FitParam::Gamma1 => relax.gamma1 = v,
                FitParam::Gamma2 => relax.gamma2 = v,
                FitParam::Gamma21 => relax.gamma21 = v,
                FitParam::GammaPh => relax.gamma_ph = v,
                FitParam::Detuning => fields.detuning = v,
                FitParam::Scale => scale = v,
                FitParam::Ku => {
                    if let Some(d) = doppler.as_mut() {
                        d.ku = v;
                    }
                }
            }
        }
        let grid = self.grid()?;
        let spectrum = match doppler {
            None => spectrum_stationary(&grid, &fields, &relax, &self.pump, self.mode)?,
            Some(d) => {
                let unchecked = DopplerParams { tolerance: None, ..d };
                doppler_average(&grid, &fields, &relax, &self.pump, &unchecked, self.mode)?
            }
        };
        Ok(spectrum.intensities().into_iter().map(|i| scale * i).collect())
    }

    fn to_internal(&self, values: &[f64]) -> Vec<f64> {
        self.free
            .iter()
            .zip(values)
            .map(|(f, &v)| if f.param.log_space() { v.ln() } else { v })
            .collect()
    }

    fn to_physical(&self, z: &[f64]) -> Vec<f64> {
        self.free
            .iter()
            .zip(z)
            .map(|(f, &v)| if f.param.log_space() { v.exp() } else { v })
            .collect()
    }

    fn internal_bounds(&self) -> Vec<(f64, f64)> {
        self.free
            .iter()
            .map(|f| {
                if f.param.log_space() {
                    let floor = f.lower.max(1e-12 * f.upper);
                    (floor.ln(), f.upper.ln())
                } else {
                    (f.lower, f.upper)
                }
            })
            .collect()
    }
}

/// Elementwise model intensity minus data intensity.
pub fn residuals(problem: &FitProblem, values: &[f64]) -> Result<Vec<f64>> {
    if values.len() != problem.free.len() {
        return Err(Error::InvalidFitProblem(format!(
            "{} values for {} free parameters",
            values.len(),
            problem.free.len()
        )));
    }
    let model = problem.model_intensities(values)?;
    Ok(model
        .iter()
        .zip(&problem.data.points)
        .map(|(m, d)| m - d.intensity)
        .collect())
}

fn sum_squares(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

struct Solver<'a> {
    problem: &'a FitProblem,
    bounds: Vec<(f64, f64)>,
}

struct Run {
    z: Vec<f64>,
    rss: f64,
    initial_rss: f64,
    iterations: usize,
    converged: bool,
    gradient_norm: f64,
    initial_gradient_norm: f64,
    jtj_diag: Vec<f64>,
}

impl<'a> Solver<'a> {
    fn clamp(&self, z: &mut [f64]) {
        for (v, (lo, hi)) in z.iter_mut().zip(&self.bounds) {
            *v = v.clamp(*lo, *hi);
        }
    }

    fn eval(&self, z: &[f64]) -> Option<Vec<f64>> {
        let r = residuals(self.problem, &self.problem.to_physical(z)).ok()?;
        r.iter().all(|x| x.is_finite()).then_some(r)
    }

    fn jacobian(&self, z: &[f64], r: &[f64]) -> Option<DMatrix<f64>> {
        let n = z.len();
        let mut jac = DMatrix::zeros(r.len(), n);
        for j in 0..n {
            let mut h = self.problem.options.relative_step * z[j].abs().max(1.0);
            if z[j] + h > self.bounds[j].1 {
                h = -h;
            }
            let mut zp = z.to_vec();
            zp[j] += h;
            let rp = self.eval(&zp)?;
            for i in 0..r.len() {
                jac[(i, j)] = (rp[i] - r[i]) / h;
            }
        }
        Some(jac)
    }

    /// Gradient with components that push against an active bound removed.
    fn projected_gradient(&self, z: &[f64], g: &DVector<f64>) -> DVector<f64> {
        let mut p = g.clone();
        for j in 0..z.len() {
            let (lo, hi) = self.bounds[j];
            if (z[j] <= lo && g[j] > 0.0) || (z[j] >= hi && g[j] < 0.0) {
                p[j] = 0.0;
            }
        }
        p
    }

    fn run(&self, mut z: Vec<f64>) -> Result<Run> {
        let opts = &self.problem.options;
        self.clamp(&mut z);
        let mut r = self.eval(&z).ok_or_else(|| {
            Error::NonFiniteResidual(format!(
                "model is not finite at the start {:?}",
                self.problem.to_physical(&z)
            ))
        })?;
        let initial_rss = sum_squares(&r);
        let mut rss = initial_rss;
        let mut mu = 1e-3;
        let mut iterations = 0;
        let mut converged = false;
        let mut initial_gradient_norm = f64::NAN;
        let mut gradient_norm;
        let mut failures = 0;

        loop {
            let jac = self
                .jacobian(&z, &r)
                .ok_or_else(|| Error::NonFiniteResidual("model is not finite next to the current iterate".into()))?;
            let jtj = jac.transpose() * &jac;
            let g = jac.transpose() * DVector::from_column_slice(&r);
            gradient_norm = self.projected_gradient(&z, &g).norm();
            if initial_gradient_norm.is_nan() {
                initial_gradient_norm = gradient_norm;
            }
            if gradient_norm <= opts.gradient_tolerance * initial_gradient_norm || gradient_norm == 0.0 {
                converged = true;
                break;
            }
            if iterations >= opts.max_iterations {
                break;
            }
            iterations += 1;

            let mut improved = false;
            while mu < 1e16 {
                let mut a = jtj.clone();
                for j in 0..z.len() {
                    a[(j, j)] += mu * jtj[(j, j)].max(1e-300);
                }
                let Some(chol) = a.cholesky() else {
                    mu *= 10.0;
                    continue;
                };
                let step = chol.solve(&(-&g));
                let mut trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                self.clamp(&mut trial);
                match self.eval(&trial) {
                    Some(rt) => {
                        failures = 0;
                        let trial_rss = sum_squares(&rt);
                        if trial_rss < rss {
                            z = trial;
                            r = rt;
                            rss = trial_rss;
                            mu = (mu * 0.3).max(1e-12);
                            improved = true;
                            break;
                        }
                        mu *= 10.0;
                    }
                    None => {
                        failures += 1;
                        if failures > 50 {
                            return Err(Error::NonFiniteResidual(
                                "every trial step produced non-finite model values".into(),
                            ));
                        }
                        mu *= 10.0;
                    }
                }
            }
            if !improved {
                // no descent possible at any damping: a stationary point to working precision
                break;
            }
        }
        Ok(Run {
            jtj_diag: self
                .jacobian(&z, &r)
                .map(|j| (0..z.len()).map(|c| j.column(c).norm_squared()).collect())
                .unwrap_or_else(|| vec![f64::NAN; z.len()]),
            z,
            rss,
            initial_rss,
            iterations,
            converged,
            gradient_norm,
            initial_gradient_norm,
        })
    }
}

fn start_points(problem: &FitProblem) -> Vec<Vec<f64>> {
    let base: Vec<f64> = problem.free.iter().map(|f| f.initial).collect();
    let z0 = problem.to_internal(&base);
    let spread = problem.options.start_spread;
    let mut starts = vec![z0.clone()];
    for k in 1..problem.options.starts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(problem.options.seed.wrapping_add(k as u64));
        let z = z0
            .iter()
            .zip(&problem.free)
            .map(|(&z, f)| {
                let n: f64 = StandardNormal.sample(&mut rng);
                if f.param.log_space() {
                    z + spread * n
                } else {
                    z + spread * z.abs().max(1.0) * n
                }
            })
            .collect();
        starts.push(z);
    }
    starts
}

/// Levenberg–Marquardt fit from several starts; returns the lowest-RSS result.
pub fn fit_spectrum(problem: &FitProblem) -> Result<FitResult> {
    problem.validate()?;
    let solver = Solver {
        problem,
        bounds: problem.internal_bounds(),
    };
    let runs: Vec<Result<Run>> = start_points(problem).into_par_iter().map(|z| solver.run(z)).collect();
    let first_error = runs.iter().find_map(|r| r.as_ref().err().cloned());
    let summaries: Vec<StartSummary> = runs
        .iter()
        .map(|r| match r {
            Ok(run) => StartSummary {
                rss: run.rss,
                iterations: run.iterations,
                converged: run.converged,
            },
            Err(_) => StartSummary {
                rss: f64::INFINITY,
                iterations: 0,
                converged: false,
            },
        })
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.as_ref().ok().map(|run| (i, run)))
        .min_by(|a, b| a.1.rss.total_cmp(&b.1.rss).then(a.0.cmp(&b.0)));
    let Some((best_start, run)) = best else {
        return Err(first_error.unwrap_or_else(|| Error::InvalidFitProblem("no start could be evaluated".into())));
    };
    let values = problem.to_physical(&run.z);
    let max_sens = run.jtj_diag.iter().copied().fold(0.0, f64::max);
    let estimates = problem
        .free
        .iter()
        .zip(values)
        .zip(&run.jtj_diag)
        .map(|((f, value), &s)| ParamEstimate {
            param: f.param,
            value,
            sensitivity: s,
            weakly_identified: !(s >= WEAK_SENSITIVITY * max_sens),
        })
        .collect();
    let initial_rss = match &runs[0] {
        Ok(r) => r.initial_rss,
        Err(_) => run.initial_rss,
    };
    Ok(FitResult {
        estimates,
        rss: run.rss,
        initial_rss,
        iterations: run.iterations,
        converged: run.converged,
        gradient_norm: run.gradient_norm,
        initial_gradient_norm: run.initial_gradient_norm,
        best_start,
        starts: summaries,
    })
}

/// Adds seeded Gaussian noise of standard deviation `fraction × max intensity`.
pub fn add_noise(spectrum: &Spectrum, fraction: f64, seed: u64) -> Result<Spectrum> {
    let sigma = fraction * spectrum.max_intensity();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy: Vec<f64> = spectrum
        .intensities()
        .iter()
        .map(|&i| {
            let n: f64 = StandardNormal.sample(&mut rng);
            i + sigma * n
        })
        .collect();
    Spectrum::from_intensities(&spectrum.deltas(), &noisy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig_a_problem(free: Vec<FreeParam>) -> FitProblem {
        let relax = RelaxationParams::new(3.0, 6.0, 6.0, 3.0).unwrap();
        let pump = PumpSource::ground_only(&relax);
        let fields = FieldConfig::with_detuning(50.0);
        let grid = DetuningGrid::linspace(-150.0, 150.0, 301).unwrap();
        let s = spectrum_stationary(&grid, &fields, &relax, &pump, PumpTermMode::BothPumps).unwrap();
        let data = Spectrum::from_intensities(&s.deltas(), &s.intensities()).unwrap();
        FitProblem {
            data,
            fields,
            relax,
            pump,
            mode: PumpTermMode::BothPumps,
            doppler: None,
            scale: 1.0,
            free,
            options: FitOptions::default(),
        }
    }

    fn free(param: FitParam, initial: f64, lower: f64, upper: f64) -> FreeParam {
        FreeParam {
            param,
            initial,
            lower,
            upper,
        }
    }

    #[test]
    fn residuals_vanish_at_truth_and_scale_linearly() {
        let p = fig_a_problem(vec![free(FitParam::Scale, 1.0, 1e-3, 1e3)]);
        assert!(residuals(&p, &[1.0]).unwrap().iter().all(|r| *r == 0.0));
        let doubled = residuals(&p, &[2.0]).unwrap();
        for (r, d) in doubled.iter().zip(&p.data.points) {
            assert!((r - d.intensity).abs() <= 1e-15 * d.intensity.max(1e-300));
        }
        let shifted = fig_a_problem(vec![free(FitParam::Detuning, 50.0, 10.0, 100.0)]);
        assert!(sum_squares(&residuals(&shifted, &[51.0]).unwrap()) > 0.0);
    }

    #[test]
    fn scale_only_fit_is_exact() {
        let mut p = fig_a_problem(vec![free(FitParam::Scale, 3.7, 1e-3, 1e3)]);
        p.options.starts = 1;
        let r = fit_spectrum(&p).unwrap();
        assert!((r.value(FitParam::Scale).unwrap() - 1.0).abs() < 1e-8);
        assert!(r.rss <= r.initial_rss);
    }

    #[test]
    fn invalid_problems_are_rejected() {
        let p = fig_a_problem(vec![free(FitParam::Gamma1, 0.0, 0.0, 10.0)]);
        assert!(matches!(fit_spectrum(&p), Err(Error::InvalidFitProblem(_))));
        let p = fig_a_problem(vec![free(FitParam::Gamma1, 20.0, 0.0, 10.0)]);
        assert!(p.validate().is_err());
        let p = fig_a_problem(vec![free(FitParam::Ku, 300.0, 1.0, 1000.0)]);
        assert!(p.validate().is_err());
        let p = fig_a_problem(vec![
            free(FitParam::Gamma1, 2.0, 0.0, 10.0),
            free(FitParam::Gamma1, 2.0, 0.0, 10.0),
        ]);
        assert!(p.validate().is_err());
    }

    #[test]
    fn noise_is_seeded() {
        let p = fig_a_problem(vec![free(FitParam::Scale, 1.0, 1e-3, 1e3)]);
        let a = add_noise(&p.data, 0.01, 7).unwrap();
        let b = add_noise(&p.data, 0.01, 7).unwrap();
        assert_eq!(a.intensities(), b.intensities());
        assert_ne!(a.intensities(), p.data.intensities());
    }
}
