//! Pseudo-spectral simulator for a moist barotropic/first-baroclinic
//! tropical atmosphere model on a periodic square, covering both the
//! relaxed precipitation closure (`eps > 0`) and its constrained
//! `eps -> 0` limit, plus the diagnostics and experiment harness used to
//! check the energy identity and the relaxation convergence rate.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod model;
pub mod spectral;
pub mod stepper;
pub mod tendencies;

pub use error::{Error, Result};
pub use model::{ModelParams, State};
pub use spectral::{Field, Grid, Spectral, VectorField};
pub use stepper::{Stepper, StepperConfig};
pub mod lab;
