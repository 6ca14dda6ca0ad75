//! Adaptive Dormand–Prince 5(4) integrator for small real systems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// First trial step; chosen from the interval length if `None`.
    pub initial_step: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-24,
            max_steps: 20_000_000,
            initial_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `y' = f(t, y)` from `t0` to `t1` in place.
pub fn integrate<F>(mut f: F, t0: f64, t1: f64, y: &mut [f64], opts: &OdeOptions) -> Result<OdeStats>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let span = t1 - t0;
    let mut stats = OdeStats::default();
    if span == 0.0 {
        return Ok(stats);
    }
    let dir = span.signum();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut t = t0;
    let mut h = opts.initial_step.unwrap_or(span.abs() * 1e-3).abs().min(span.abs());
    f(t, y, &mut k[0]);
    let min_step = 1e-14 * span.abs().max(t0.abs());
    let mut prev_err: f64 = 1e-4;

    while (t1 - t) * dir > 0.0 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StiffIntegration(format!(
                "step budget of {} exhausted at t = {t:e} (target {t1:e})",
                opts.max_steps
            )));
        }
        if h < min_step {
            return Err(Error::StiffIntegration(format!(
                "step size {h:e} fell below {min_step:e} at t = {t:e}"
            )));
        }
        let last = (t1 - t).abs() <= h * (1.0 + 1e-12);
        let hs = if last { t1 - t } else { dir * h };

        stage(&mut tmp, y, hs, &k, &[A21]);
        f(t + C2 * hs, &tmp, &mut k[1]);
        stage(&mut tmp, y, hs, &k, &[A31, A32]);
        f(t + C3 * hs, &tmp, &mut k[2]);
        stage(&mut tmp, y, hs, &k, &[A41, A42, A43]);
        f(t + C4 * hs, &tmp, &mut k[3]);
        stage(&mut tmp, y, hs, &k, &[A51, A52, A53, A54]);
        f(t + C5 * hs, &tmp, &mut k[4]);
        stage(&mut tmp, y, hs, &k, &[A61, A62, A63, A64, A65]);
        f(t + hs, &tmp, &mut k[5]);
        for i in 0..n {
            y_new[i] = y[i] + hs * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
        }
        f(t + hs, &y_new, &mut k[6]);

        let mut err: f64 = 0.0;
        for i in 0..n {
            let e = hs * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / scale).abs());
        }
        if !err.is_finite() {
            return Err(Error::StiffIntegration(format!(
                "non-finite error estimate at t = {t:e}"
            )));
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + hs };
            y.copy_from_slice(&y_new);
            k.swap(0, 6);
            stats.accepted += 1;
            // PI controller
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.7 / 5.0) * prev_err.powf(0.4 / 5.0)).clamp(0.2, 5.0)
            };
            prev_err = err.max(1e-4);
            h = hs.abs() * factor;
        } else {
            stats.rejected += 1;
            h = hs.abs() * (0.9 * err.powf(-0.2)).max(0.1);
        }
    }
    Ok(stats)
}

fn stage(out: &mut [f64], y: &[f64], h: f64, k: &[Vec<f64>], a: &[f64]) {
    for i in 0..y.len() {
        let mut acc = 0.0;
        for (j, aj) in a.iter().enumerate() {
            acc += aj * k[j][i];
        }
        out[i] = y[i] + h * acc;
    }
}
