//! Peak, width and dip extraction from intensity spectra.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{RelaxationParams, Spectrum};

pub const DEFAULT_PROMINENCE_FRACTION: f64 = 0.05;

/// Minimum number of samples for any feature search.
const MIN_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub position: f64,
    pub height: f64,
    pub prominence: f64,
    /// Full width at half prominence; `None` if a crossing lies off the grid.
    pub fwhm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentralDip {
    pub position: f64,
    /// `1 - I(min) / min(I(left max), I(right max))`.
    pub depth: f64,
    pub left_max: f64,
    pub right_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub peaks: Vec<Peak>,
    pub central_dip: Option<CentralDip>,
    pub prominence_fraction: f64,
    pub dip_window: Option<f64>,
}

impl PeakReport {
    pub fn positions(&self) -> Vec<f64> {
        self.peaks.iter().map(|p| p.position).collect()
    }

    /// Peak closest to `delta`, if any.
    pub fn nearest(&self, delta: f64) -> Option<&Peak> {
        self.peaks
            .iter()
            .min_by(|a, b| (a.position - delta).abs().total_cmp(&(b.position - delta).abs()))
    }
}

/// Topographic prominence of the sample at `i` (a local maximum).
fn prominence(y: &[f64], i: usize) -> f64 {
    let h = y[i];
    let mut left_base = h;
    for &v in y[..i].iter().rev() {
        if v > h {
            break;
        }
        left_base = left_base.min(v);
    }
    let mut right_base = h;
    for &v in &y[i + 1..] {
        if v > h {
            break;
        }
        right_base = right_base.min(v);
    }
    h - left_base.max(right_base)
}

fn crossing(x0: f64, y0: f64, x1: f64, y1: f64, level: f64) -> f64 {
    if y1 == y0 {
        return 0.5 * (x0 + x1);
    }
    x0 + (level - y0) * (x1 - x0) / (y1 - y0)
}

fn half_prominence_width(x: &[f64], y: &[f64], i: usize, prom: f64) -> Option<f64> {
    let level = y[i] - 0.5 * prom;
    let left = (0..i).rev().find(|&j| y[j] < level)?;
    let right = (i + 1..y.len()).find(|&j| y[j] < level)?;
    let xl = crossing(x[left], y[left], x[left + 1], y[left + 1], level);
    let xr = crossing(x[right - 1], y[right - 1], x[right], y[right], level);
    Some(xr - xl)
}

fn strict_local_maxima(y: &[f64]) -> impl Iterator<Item = usize> + '_ {
    (1..y.len().saturating_sub(1)).filter(move |&i| y[i] > y[i - 1] && y[i] > y[i + 1])
}

/// Strict local maxima whose prominence is at least `prominence_fraction`
/// of the global maximum, sorted by position.
pub fn find_peaks(spectrum: &Spectrum, prominence_fraction: f64) -> Result<PeakReport> {
    if spectrum.len() < MIN_POINTS {
        return Err(Error::EmptySpectrum {
            needed: MIN_POINTS,
            got: spectrum.len(),
        });
    }
    if !(prominence_fraction > 0.0 && prominence_fraction < 1.0) {
        return Err(Error::param(
            "prominence_fraction",
            format!("must lie in (0, 1), got {prominence_fraction}"),
        ));
    }
    let x = spectrum.deltas();
    let y = spectrum.intensities();
    let threshold = prominence_fraction * spectrum.max_intensity();
    let peaks = strict_local_maxima(&y)
        .filter_map(|i| {
            let prom = prominence(&y, i);
            (prom > 0.0 && prom >= threshold).then(|| Peak {
                position: x[i],
                height: y[i],
                prominence: prom,
                fwhm: half_prominence_width(&x, &y, i, prom),
            })
        })
        .collect();
    Ok(PeakReport {
        peaks,
        central_dip: None,
        prominence_fraction,
        dip_window: None,
    })
}

/// Local minimum nearest δ = 0 within `|δ| <= window`, reported only if it is
/// flanked on both sides by local maxima inside the window.
pub fn detect_central_dip(spectrum: &Spectrum, window: f64) -> Result<Option<CentralDip>> {
    if !(window > 0.0) || !window.is_finite() {
        return Err(Error::InvalidWindow(format!("window must be > 0, got {window}")));
    }
    let x = spectrum.deltas();
    let y = spectrum.intensities();
    let inside: Vec<usize> = (0..x.len()).filter(|&i| x[i].abs() <= window).collect();
    if inside.len() < MIN_POINTS {
        return Err(Error::InvalidWindow(format!(
            "window ±{window} holds {} grid points, need at least {MIN_POINTS}",
            inside.len()
        )));
    }
    let (lo, hi) = (inside[0], inside[inside.len() - 1]);
    let interior = |i: usize| i > 0 && i + 1 < y.len();
    let minimum = (lo..=hi)
        .filter(|&i| interior(i) && y[i] < y[i - 1] && y[i] <= y[i + 1])
        .min_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs()));
    let Some(m) = minimum else {
        return Ok(None);
    };
    let is_max = |i: usize| interior(i) && y[i] > y[i - 1] && y[i] >= y[i + 1];
    let highest = |range: &mut dyn Iterator<Item = usize>| range.filter(|&i| is_max(i)).map(|i| y[i]).reduce(f64::max);
    let left = highest(&mut (lo..m));
    let right = highest(&mut (m + 1..=hi));
    let (Some(left_max), Some(right_max)) = (left, right) else {
        return Ok(None);
    };
    let shoulder = left_max.min(right_max);
    let depth = 1.0 - y[m] / shoulder;
    if !(depth > 0.0) {
        return Ok(None);
    }
    Ok(Some(CentralDip {
        position: x[m],
        depth: depth.min(1.0),
        left_max,
        right_max,
    }))
}

/// Dip search half-width used when none is given: four times γ1.
pub fn default_dip_window(relax: &RelaxationParams) -> f64 {
    4.0 * relax.gamma1
}

/// Peaks plus central-dip search in one report.
pub fn analyze(spectrum: &Spectrum, prominence_fraction: f64, dip_window: f64) -> Result<PeakReport> {
    let mut report = find_peaks(spectrum, prominence_fraction)?;
    report.central_dip = detect_central_dip(spectrum, dip_window)?;
    report.dip_window = Some(dip_window);
    Ok(report)
}

/// Side-peak positions `(-2Δ, +2Δ)` for pump detuning Δ.
pub fn predict_side_peaks(pump_detuning: f64) -> (f64, f64) {
    (-2.0 * pump_detuning, 2.0 * pump_detuning)
}

/// `γ1 > γ2 - γ21`.
pub fn dip_condition(relax: &RelaxationParams) -> bool {
    relax.gamma1 > relax.gamma2 - relax.gamma21
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lorentz(x: f64, c: f64, g: f64) -> f64 {
        g * g / ((x - c).powi(2) + g * g)
    }

    fn sampled(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Spectrum {
        let x: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| f(v)).collect();
        Spectrum::from_intensities(&x, &y).unwrap()
    }

    #[test]
    fn single_lorentzian_width() {
        let s = sampled(|x| lorentz(x, 10.0, 3.0), -200.0, 200.0, 4001);
        let r = find_peaks(&s, DEFAULT_PROMINENCE_FRACTION).unwrap();
        assert_eq!(r.peaks.len(), 1);
        assert!((r.peaks[0].position - 10.0).abs() <= 0.1);
        let w = r.peaks[0].fwhm.unwrap();
        assert!((w - 6.0).abs() < 0.05 * 6.0, "{w}");
        assert!(detect_central_dip(&s, 20.0).unwrap().is_none());
    }

    #[test]
    fn three_separated_lines() {
        let s = sampled(
            |x| lorentz(x, -100.0, 3.0) + lorentz(x, 0.0, 3.0) + lorentz(x, 100.0, 3.0),
            -150.0,
            150.0,
            3001,
        );
        let r = find_peaks(&s, 0.05).unwrap();
        let pos = r.positions();
        assert_eq!(pos.len(), 3);
        for (p, e) in pos.iter().zip([-100.0, 0.0, 100.0]) {
            assert!((p - e).abs() < 0.2);
        }
    }

    #[test]
    fn peak_count_is_scale_invariant() {
        let s = sampled(|x| lorentz(x, -5.0, 1.0) + 0.3 * lorentz(x, 5.0, 1.0), -20.0, 20.0, 401);
        let scaled = Spectrum::from_intensities(
            &s.deltas(),
            &s.intensities().iter().map(|v| v * 1e7).collect::<Vec<_>>(),
        )
        .unwrap();
        assert_eq!(
            find_peaks(&s, 0.05).unwrap().positions(),
            find_peaks(&scaled, 0.05).unwrap().positions()
        );
    }

    #[test]
    fn dip_between_two_lines() {
        let s = sampled(|x| lorentz(x, -3.0, 2.0) + lorentz(x, 3.0, 2.0), -20.0, 20.0, 401);
        let dip = detect_central_dip(&s, 10.0).unwrap().unwrap();
        assert!(dip.position.abs() < 1e-9);
        let expected = 1.0 - s.intensities()[200] / dip.left_max;
        assert!((dip.depth - expected).abs() < 1e-12);
    }

    #[test]
    fn too_few_points_or_bad_window() {
        let s = Spectrum::from_intensities(&[0.0, 1.0, 2.0], &[1.0, 2.0, 1.0]).unwrap();
        assert!(matches!(find_peaks(&s, 0.05), Err(Error::EmptySpectrum { .. })));
        let s = sampled(|x| lorentz(x, 0.0, 1.0), -10.0, 10.0, 21);
        assert!(detect_central_dip(&s, 1.0).is_err());
        assert!(detect_central_dip(&s, -1.0).is_err());
    }

    #[test]
    fn side_peak_law_and_dip_condition() {
        assert_eq!(predict_side_peaks(115.0), (-230.0, 230.0));
        assert_eq!(predict_side_peaks(105.0), (-210.0, 210.0));
        assert_eq!(predict_side_peaks(0.0), (0.0, 0.0));
        let (a, b) = predict_side_peaks(-37.5);
        assert_eq!((a, b), (75.0, -75.0));
        let r = |g1, g2, g21| RelaxationParams::new(g1, g2, g21, 3.0).unwrap();
        assert!(dip_condition(&r(3.0, 0.1, 6.0)));
        assert!(!dip_condition(&r(3.0, 20.0, 6.0)));
        assert!(dip_condition(&r(3.0, 6.0, 6.0)));
    }
}
