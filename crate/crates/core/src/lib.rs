//! Pseudo-spectral simulation and analysis of the Leray-deconvolution family of
//! turbulence models on the 2π-periodic box.
//!
//! The crate is organized bottom-up: [`spectral`] holds the Fourier
//! representation, [`filtering`] the differential filter and van Cittert
//! operators, [`solver`] the time integrator, [`diagnostics`] the measured
//! quantities, [`experiments`] the convergence studies and [`io`] the
//! configuration and file formats used by the command-line tool.

pub mod error;
pub mod filtering;
pub mod solver;
pub mod spectral;
pub mod diagnostics;
pub mod experiments;
pub mod io;

pub use error::{Error, Result};
