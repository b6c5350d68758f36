//! Viscous shock profiles of hyperbolic–parabolic conservation laws, Evans
//! function stability checks, Green-kernel phase tracking and nonlinear decay
//! experiments.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod models;
pub mod ode;
pub mod profile;
pub mod quad;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
