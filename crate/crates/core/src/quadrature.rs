//! Quadrature rules for averaging over a Maxwell velocity distribution.
//!
//! Velocities are measured in units of the most probable speed, `x = v/u`,
//! so the target measure is `exp(-x²)/√π dx`. Every rule returned here has
//! weights that already include that density and sum to one.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Scaled velocities beyond this are dropped; the neglected mass is erfc(6) ≈ 2e-17.
pub const VELOCITY_CUTOFF: f64 = 6.0;

/// Widest panel of the composite rule, in units of `u`.
const MAX_PANEL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum RuleKind {
    /// Composite Gauss–Legendre with panels graded toward resonance poles.
    #[default]
    #[serde(rename = "pole-adapted")]
    PoleAdapted,
    /// Plain Gauss–Hermite; only accurate when every resonance is much wider than `ku`.
    #[serde(rename = "gauss-hermite")]
    GaussHermite,
}

impl RuleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RuleKind::PoleAdapted => "pole-adapted",
            RuleKind::GaussHermite => "gauss-hermite",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VelocityRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl VelocityRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    fn normalize(mut self) -> Self {
        let total: f64 = self.weights.iter().sum();
        if total > 0.0 {
            self.weights.iter_mut().for_each(|w| *w /= total);
        }
        self
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Hermite rule for the weight `exp(-x²)` (Golub–Welsch).
///
/// Returned weights are divided by √π so they sum to one.
pub fn gauss_hermite(n: usize) -> VelocityRule {
    assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let off = (k as f64 / 2.0).sqrt();
        jacobi[(k, k - 1)] = off;
        jacobi[(k - 1, k)] = off;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    VelocityRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
    .normalize()
}

/// Gauss–Legendre nodes per panel for a nominal quadrature order.
pub fn nodes_per_panel(order: usize) -> usize {
    (order / 8).max(2)
}

/// Panel breakpoints on [-cutoff, cutoff], refined geometrically toward each pole.
///
/// A pole at `r + i h` contributes breakpoints `r` and `r ± h·2^m` until the
/// spacing reaches the uniform panel width, so every panel stays at least
/// about its own length away from every pole.
pub fn pole_adapted_breakpoints(poles: &[Complex64], cutoff: f64) -> Vec<f64> {
    let uniform = (2.0 * cutoff / MAX_PANEL).ceil() as usize;
    let mut points: Vec<f64> = (0..=uniform)
        .map(|i| -cutoff + 2.0 * cutoff * i as f64 / uniform as f64)
        .collect();
    for pole in poles {
        let (r, h) = (pole.re, pole.im.abs());
        if !r.is_finite() || !h.is_finite() || h >= MAX_PANEL || r.abs() > cutoff + MAX_PANEL {
            continue;
        }
        let h = h.max(1e-14 * cutoff);
        points.push(r);
        let mut step = h;
        while step < MAX_PANEL {
            points.push(r - step);
            points.push(r + step);
            step *= 2.0;
        }
    }
    points.retain(|p| p.abs() <= cutoff);
    points.sort_by(f64::total_cmp);
    let min_gap = 1e-15 * cutoff;
    points.dedup_by(|b, a| (*b - *a).abs() <= min_gap);
    points
}

/// Maxwell-weighted composite Gauss–Legendre rule adapted to `poles` (in units of `u`).
pub fn pole_adapted_rule(poles: &[Complex64], order: usize) -> VelocityRule {
    let (gl_nodes, gl_weights) = gauss_legendre(nodes_per_panel(order));
    let breaks = pole_adapted_breakpoints(poles, VELOCITY_CUTOFF);
    let mut rule = VelocityRule {
        nodes: Vec::with_capacity(breaks.len() * gl_nodes.len()),
        weights: Vec::with_capacity(breaks.len() * gl_nodes.len()),
    };
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (t, wt) in gl_nodes.iter().zip(&gl_weights) {
            let x = mid + half * t;
            rule.nodes.push(x);
            rule.weights.push(half * wt * maxwell_density(x));
        }
    }
    rule.normalize()
}

/// `exp(-x²)/√π`.
#[inline]
pub fn maxwell_density(x: f64) -> f64 {
    (-x * x).exp() / PI.sqrt()
}

/// Faddeeva function `w(z) = exp(-z²) erfc(-iz)` for `Im z >= 0`.
///
/// Weideman's rational expansion (N = 36) for moderate |z|, Laplace
/// continued fraction for large |z|.
pub fn faddeeva(z: Complex64) -> Complex64 {
    debug_assert!(z.im >= 0.0, "faddeeva is implemented for the upper half-plane");
    if z.norm() > 12.0 {
        return faddeeva_continued_fraction(z, 40);
    }
    let coeffs = weideman_coefficients();
    let l = weideman_scale();
    let iz = Complex64::i() * z;
    let big_z = (l + iz) / (l - iz);
    let mut p = Complex64::new(0.0, 0.0);
    for a in coeffs.iter().rev() {
        p = p * big_z + a;
    }
    2.0 * p / ((l - iz) * (l - iz)) + 1.0 / (PI.sqrt() * (l - iz))
}

const WEIDEMAN_N: usize = 36;

fn weideman_scale() -> f64 {
    (WEIDEMAN_N as f64 / std::f64::consts::SQRT_2).sqrt()
}

fn weideman_coefficients() -> &'static [f64; WEIDEMAN_N] {
    static COEFFS: std::sync::OnceLock<[f64; WEIDEMAN_N]> = std::sync::OnceLock::new();
    COEFFS.get_or_init(|| {
        let n = WEIDEMAN_N;
        let m = 2 * n;
        let l = weideman_scale();
        let samples: Vec<(f64, f64)> = (-(m as i64) + 1..m as i64)
            .map(|k| {
                let theta = k as f64 * PI / m as f64;
                let t = l * (theta / 2.0).tan();
                (theta, (-t * t).exp() * (l * l + t * t))
            })
            .collect();
        let mut out = [0.0; WEIDEMAN_N];
        for (j, slot) in out.iter_mut().enumerate() {
            let order = (j + 1) as f64;
            let sum: f64 = samples.iter().map(|(theta, f)| f * (order * theta).cos()).sum();
            *slot = sum / (2 * m) as f64;
        }
        out
    })
}

fn faddeeva_continued_fraction(z: Complex64, terms: usize) -> Complex64 {
    let mut tail = z;
    for k in (1..=terms).rev() {
        tail = z - (k as f64 / 2.0) / tail;
    }
    Complex64::i() / (PI.sqrt() * tail)
}

/// Mean of `1/(z + s)` over a centred Gaussian `s` of standard deviation
/// `sigma`, for `Im z > 0`.
pub fn gaussian_mean_reciprocal(z: Complex64, sigma: f64) -> Complex64 {
    if sigma <= 0.0 {
        return 1.0 / z;
    }
    let scale = std::f64::consts::SQRT_2 * sigma;
    let zeta = z / scale;
    if zeta.norm() > 1e6 {
        return 1.0 / z;
    }
    -Complex64::i() * PI.sqrt() * faddeeva(zeta) / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((integral - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn hermite_rule_moments() {
        let rule = gauss_hermite(40);
        assert!((rule.weight_sum() - 1.0).abs() < 1e-12);
        // <x²> = 1/2, <x⁴> = 3/4 for exp(-x²)/√π
        let m2: f64 = rule.iter().map(|(x, w)| w * x * x).sum();
        let m4: f64 = rule.iter().map(|(x, w)| w * x.powi(4)).sum();
        assert!((m2 - 0.5).abs() < 1e-12);
        assert!((m4 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn adapted_rule_weights_sum_to_one() {
        let poles = [Complex64::new(0.3, 1e-4), Complex64::new(-2.0, 0.02)];
        for order in [4, 32, 64, 128] {
            let rule = pole_adapted_rule(&poles, order);
            assert!((rule.weight_sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn adapted_rule_resolves_narrow_lorentzian() {
        // ∫ exp(-x²)/√π · h/((x-r)² + h²) dx = √π Re w((r + i h)... ) via Faddeeva
        let (r, h) = (0.4, 1e-3);
        let exact = (PI.sqrt() * faddeeva(Complex64::new(r, h))).re;
        let rule = pole_adapted_rule(&[Complex64::new(r, h)], 128);
        let approx: f64 = rule.iter().map(|(x, w)| w * h / ((x - r).powi(2) + h * h)).sum();
        assert!((approx - exact).abs() < 1e-9 * exact, "{approx} vs {exact}");
    }

    #[test]
    fn faddeeva_reference_values() {
        // w(0) = 1, w(i) = e·erfc(1), w(1) = e⁻¹ + 2i/√π·F(1) with F Dawson's integral.
        let w0 = faddeeva(Complex64::new(0.0, 0.0));
        assert!((w0 - Complex64::new(1.0, 0.0)).norm() < 1e-13);
        let wi = faddeeva(Complex64::new(0.0, 1.0));
        assert!((wi.re - 0.427_583_576_155_807).abs() < 1e-13 && wi.im.abs() < 1e-13);
        let w1 = faddeeva(Complex64::new(1.0, 0.0));
        assert!((w1.re - 0.367_879_441_171_442_3).abs() < 1e-13);
        assert!((w1.im - 0.607_157_705_841_393_7).abs() < 1e-13);
    }

    #[test]
    fn faddeeva_branches_agree_at_switch_radius() {
        for angle in [0.05_f64, 0.5, 1.0, 1.5] {
            let z = Complex64::from_polar(12.0, angle);
            let a = faddeeva_continued_fraction(z, 40);
            let coeffs = weideman_coefficients();
            let l = weideman_scale();
            let iz = Complex64::i() * z;
            let big_z = (l + iz) / (l - iz);
            let mut p = Complex64::new(0.0, 0.0);
            for c in coeffs.iter().rev() {
                p = p * big_z + c;
            }
            let b = 2.0 * p / ((l - iz) * (l - iz)) + 1.0 / (PI.sqrt() * (l - iz));
            assert!((a - b).norm() < 1e-12 * a.norm(), "{a} vs {b}");
        }
    }

    #[test]
    fn gaussian_average_matches_quadrature() {
        let z = Complex64::new(0.7, 0.3);
        let sigma = 1.3;
        let exact = gaussian_mean_reciprocal(z, sigma);
        // s = √2 σ x with x ~ exp(-x²)/√π
        let pole = -z / (std::f64::consts::SQRT_2 * sigma);
        let rule = pole_adapted_rule(&[pole], 256);
        let approx: Complex64 = rule
            .iter()
            .map(|(x, w)| w / (z + std::f64::consts::SQRT_2 * sigma * x))
            .sum();
        assert!((approx - exact).norm() < 1e-10 * exact.norm());
        assert_eq!(gaussian_mean_reciprocal(z, 0.0), 1.0 / z);
    }
}
