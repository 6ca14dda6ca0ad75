//! Order-by-order steady-state solution over multi-frequency harmonics.
//!
//! The density matrix is expanded as `ρ = Σ_n Σ_m ρ^(n)_m e^{-i(ν·m)t}` with
//! `m ∈ Z³` counting net photons taken from each field. Each order solves
//! `(L0 + iν·m) ρ^(n)_m = i Σ [V, ρ^(n-1)]` over all modes reachable with one
//! more field interaction.

use std::collections::BTreeMap;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use super::pulsation::CONDITION_LIMIT;
use super::system::{Drive, TwoLevelSystem};
use crate::error::{Error, Result};

type Mode = [i32; 3];
/// Vectorised density matrix `(ρ11, ρ22, ρ21, ρ12)`.
type Rho = Vector4<Complex64>;

/// Mode of the phase-matched signal: one photon from each pump, one emitted into the probe.
pub const SIGNAL_MODE: Mode = [1, 1, -1];

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSolution {
    /// ρ21 at third order in the signal mode.
    pub rho21: Complex64,
    pub modes_solved: usize,
    pub max_condition: f64,
}

fn free_liouvillian(sys: &TwoLevelSystem) -> Matrix4<Complex64> {
    let r = &sys.relax;
    let g = sys.coherence_decay();
    let c = |x: f64| Complex64::new(x, 0.0);
    let zero = c(0.0);
    Matrix4::new(
        c(-r.gamma1),
        c(r.gamma21),
        zero,
        zero,
        zero,
        c(-r.gamma2),
        zero,
        zero,
        zero,
        zero,
        Complex64::new(-g, sys.detuning),
        zero,
        zero,
        zero,
        zero,
        Complex64::new(-g, -sys.detuning),
    )
}

/// `-i[V, ρ]` for `V = [[0, v12], [v21, 0]]`.
fn commutator(v12: Complex64, v21: Complex64, rho: &Rho) -> Rho {
    let (r11, r22, r21, r12) = (rho[0], rho[1], rho[2], rho[3]);
    let mi = -Complex64::i();
    Rho::new(
        mi * (v12 * r21 - r12 * v21),
        mi * (v21 * r12 - r21 * v12),
        mi * v21 * (r11 - r22),
        mi * (-v12) * (r11 - r22),
    )
}

fn solve(l: &Matrix4<Complex64>, rhs: &Rho) -> Result<(Rho, f64)> {
    let sv = l.svd(false, false).singular_values;
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
    let x = l.lu().solve(rhs).ok_or(Error::SingularSystem {
        condition: f64::INFINITY,
        limit: CONDITION_LIMIT,
    })?;
    Ok((x, condition))
}

/// Third-order ρ21 in [`SIGNAL_MODE`].
pub fn solve_third_order(sys: &TwoLevelSystem, drive: &Drive) -> Result<HarmonicSolution> {
    let l0 = free_liouvillian(sys);
    let lambda = Rho::new(
        Complex64::from(sys.pump.lambda1),
        Complex64::from(sys.pump.lambda2),
        Complex64::from(0.0),
        Complex64::from(0.0),
    );
    let (rho0, mut max_condition) = solve(&l0, &(-lambda))?;
    let mut current: BTreeMap<Mode, Rho> = BTreeMap::new();
    current.insert([0, 0, 0], rho0);
    let mut modes_solved = 1;

    for order in 1..=3 {
        let mut sources: BTreeMap<Mode, Rho> = BTreeMap::new();
        for (mode, rho) in &current {
            for (j, tone) in drive.tones.iter().enumerate() {
                let w = tone.coupling();
                if w == Complex64::from(0.0) {
                    continue;
                }
                // absorption: V21 part, mode + e_j; emission: V12 part, mode - e_j
                for (step, v12, v21) in [(1, Complex64::from(0.0), w), (-1, w.conj(), Complex64::from(0.0))] {
                    let mut target = *mode;
                    target[j] += step;
                    if !reaches_signal(&target, 3 - order) {
                        continue;
                    }
                    let s = commutator(v12, v21, rho);
                    *sources.entry(target).or_insert_with(Rho::zeros) += s;
                }
            }
        }
        let mut next = BTreeMap::new();
        for (mode, source) in sources {
            let omega: f64 = (0..3).map(|j| drive.tones[j].offset * mode[j] as f64).sum();
            let mut l = l0;
            for d in 0..4 {
                l[(d, d)] += Complex64::new(0.0, omega);
            }
            // (L0 + iω) ρ = -S with S = -i[V, ρ_prev]
            let (rho, cond) = solve(&l, &(-source))?;
            max_condition = max_condition.max(cond);
            modes_solved += 1;
            next.insert(mode, rho);
        }
        current = next;
    }
    let rho21 = current.get(&SIGNAL_MODE).map(|r| r[2]).unwrap_or_default();
    Ok(HarmonicSolution {
        rho21,
        modes_solved,
        max_condition,
    })
}

fn reaches_signal(mode: &Mode, remaining: i32) -> bool {
    let distance: i32 = (0..3).map(|j| (SIGNAL_MODE[j] - mode[j]).abs()).sum();
    distance <= remaining
}
