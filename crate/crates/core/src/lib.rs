//! Nearly degenerate four-wave mixing in an open two-level system.
//!
//! The crate evaluates the closed-form third-order lineshape for a single
//! velocity class, averages it over a Maxwell distribution, checks it against
//! a brute-force density-matrix solver, extracts spectral features, and fits
//! relaxation rates to measured or synthetic spectra.

// `!(x > 0.0)` rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod check;
pub mod cli;
pub mod config;
pub mod doppler;
pub mod error;
pub mod fit;
pub mod io;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod repump;

pub use error::{Error, Result};
