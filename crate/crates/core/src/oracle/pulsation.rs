use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::RelaxationParams;

/// Condition number above which a linear solve is refused.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Population response at beat frequency `delta` to a source `S` that adds
/// `-S` to level 1 and `+S` to level 2 (time dependence `e^{-iδt}`).
///
/// Solves the 2×2 rate equations directly and returns the `ρ11 - ρ22` component.
pub fn pulsation_solve(delta: f64, relax: &RelaxationParams, source: Complex64) -> Result<Complex64> {
    relax.validate()?;
    relax.require_steady_state()?;
    let z = Complex64::new(0.0, delta);
    let m = Matrix2::new(
        relax.gamma1 - z,
        Complex64::from(-relax.gamma21),
        Complex64::from(0.0),
        relax.gamma2 - z,
    );
    let condition = condition_number(&m);
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::SingularSystem {
            condition,
            limit: CONDITION_LIMIT,
        });
    }
    let rhs = Vector2::new(-source, source);
    let x = m.lu().solve(&rhs).ok_or(Error::SingularSystem {
        condition: f64::INFINITY,
        limit: CONDITION_LIMIT,
    })?;
    Ok(x[0] - x[1])
}

fn condition_number(m: &Matrix2<Complex64>) -> f64 {
    let sv = m.svd(false, false).singular_values;
    let (max, min) = (sv.max(), sv.min());
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
