//! Strong-coupling coefficients of the quartic anharmonic oscillator ground
//! state by variational perturbation theory, and the location of the leading
//! Bender-Wu singularity that limits their convergence.
//!
//! The modules build on one another bottom-up:
//!
//! * [`precision`]: exact rationals and tagged big reals with verified evaluation
//! * [`series`]: exact Rayleigh-Schroedinger coefficients
//! * [`variational`]: reexpanded series and strong-coupling approximants
//! * [`asymptotics`]: saddle-point constants and convergence models
//! * [`singularity`]: singularity location from the approximant errors and coefficient ratios
//! * [`oracle`]: independent ground-state energies by basis diagonalization

pub mod asymptotics;
pub mod error;
pub mod oracle;
pub mod precision;
pub mod series;
pub mod singularity;
pub mod variational;

pub use error::{Error, Result};
pub use precision::{BigRational, BigReal, HalfBinomialTable, PrecisionPolicy};
