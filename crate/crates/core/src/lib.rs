//! Two-phase Navier-Stokes flow with a soluble surfactant, posed on a fixed
//! reference domain through a Hanzawa transformation.

pub mod banded;
pub mod config;
pub mod constitutive;
pub mod diagnostics;
pub mod discrete;
pub mod driver;
pub mod error;
pub mod field;
pub mod geometry;
pub mod hanzawa;
pub mod linear_solver;
pub mod nonlinear;
pub mod persist;
pub mod radial;
pub mod scalar;
pub mod spectral;
pub mod state;
pub mod transformed_ops;
pub mod verify;

pub use error::{FlowError, Result};
pub use scalar::Real;
