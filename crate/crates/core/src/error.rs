use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// The two population-pulsation poles coincide and the (1 ± R) split is singular.
    #[error("DegenerateRates: |gamma2 - gamma1| = {separation:e} is within the degeneracy tolerance {tolerance:e}")]
    DegenerateRates { separation: f64, tolerance: f64 },

    #[error("InvalidRates: {0}")]
    InvalidRates(String),

    #[error("InvalidWidth: most probable speed must be positive, got {0}")]
    InvalidWidth(f64),

    #[error("invalid detuning grid: {0}")]
    InvalidGrid(String),

    #[error("QuadratureNotConverged: doubling the order changed the intensity by {change:e} (relative), tolerance {tolerance:e}")]
    QuadratureNotConverged { change: f64, tolerance: f64 },

    #[error("EmptySpectrum: need at least {needed} points, got {got}")]
    EmptySpectrum { needed: usize, got: usize },

    #[error("invalid analysis window: {0}")]
    InvalidWindow(String),

    #[error("SingularSystem: condition number {condition:e} exceeds {limit:e}")]
    SingularSystem { condition: f64, limit: f64 },

    #[error("NotConverged: estimated relative error {estimate:e} exceeds target {target:e}")]
    NotConverged { estimate: f64, target: f64 },

    #[error("StiffIntegration: {0}")]
    StiffIntegration(String),

    #[error("NonFiniteResidual: model produced non-finite values at every trial point ({0})")]
    NonFiniteResidual(String),

    #[error("invalid fit problem: {0}")]
    InvalidFitProblem(String),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureNotConverged { .. }
                | Error::SingularSystem { .. }
                | Error::NotConverged { .. }
                | Error::StiffIntegration(_)
                | Error::NonFiniteResidual(_)
        )
    }
}
