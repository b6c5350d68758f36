//! Built-in test models.

use super::FluxViscositySystem;
use crate::error::{Error, Result};

/// Viscous Burgers equation `u_t + (u^2/2)_x = (mu u_x)_x`.
pub fn burgers(mu: f64) -> Result<FluxViscositySystem> {
    if !(mu > 0.0) {
        return Err(Error::InvalidInput("Burgers viscosity must be positive".into()));
    }
    FluxViscositySystem::builder("burgers", 1, 1)
        .f1(|u, o| o[0] = 0.5 * u[0] * u[0])
        .df1(|u, o| o[0] = u[0])
        .viscosity(move |_, o| o[0] = mu)
        .viscosity_derivative(|_, _, o| o[0] = 0.0)
        .build()
}

/// Isentropic Navier–Stokes equations in Lagrangian coordinates, `U = (v, u)`:
/// `v_t - u_x = 0`, `u_t + p(v)_x = (nu u_x / v)_x`, `p(v) = kappa v^-gamma`.
pub fn psystem(gamma: f64, kappa: f64, nu: f64) -> Result<FluxViscositySystem> {
    if !(gamma >= 1.0) || !(kappa > 0.0) || !(nu > 0.0) {
        return Err(Error::InvalidInput("p-system needs gamma >= 1, kappa > 0, nu > 0".into()));
    }
    FluxViscositySystem::builder("psystem", 2, 1)
        .f1(move |u, o| {
            o[0] = -u[1];
            o[1] = kappa * u[0].powf(-gamma);
        })
        .df1(move |u, o| {
            o[0] = 0.0;
            o[1] = -1.0;
            o[2] = -gamma * kappa * u[0].powf(-gamma - 1.0);
            o[3] = 0.0;
        })
        .viscosity(move |u, o| {
            o[0] = 0.0;
            o[1] = 0.0;
            o[2] = 0.0;
            o[3] = nu / u[0];
        })
        .viscosity_derivative(move |u, k, o| {
            o.iter_mut().for_each(|v| *v = 0.0);
            if k == 0 {
                o[3] = -nu / (u[0] * u[0]);
            }
        })
        .admissible(|u| u[0] > 0.0)
        .build()
}

/// Rotationally invariant cubic system `U_t + (|U|^2 U)_x = (B U_x)_x`,
/// `U in R^2`, with a constant viscosity matrix `B`.
pub fn cubic(b: [[f64; 2]; 2]) -> Result<FluxViscositySystem> {
    FluxViscositySystem::builder("cubic", 2, 2)
        .f1(|u, o| {
            let q = u[0] * u[0] + u[1] * u[1];
            o[0] = q * u[0];
            o[1] = q * u[1];
        })
        .df1(|u, o| {
            let q = u[0] * u[0] + u[1] * u[1];
            o[0] = q + 2.0 * u[0] * u[0];
            o[1] = 2.0 * u[0] * u[1];
            o[2] = 2.0 * u[1] * u[0];
            o[3] = q + 2.0 * u[1] * u[1];
        })
        .viscosity(move |_, o| {
            o[0] = b[0][0];
            o[1] = b[0][1];
            o[2] = b[1][0];
            o[3] = b[1][1];
        })
        .viscosity_derivative(|_, _, o| o.iter_mut().for_each(|v| *v = 0.0))
        .build()
}

/// Quadratic 2x2 system `U_t + F(U)_x = mu U_xx` with
/// `F(u, v) = (v^2 - u^2, 2 u v)`. It carries standing undercompressive
/// shocks `(-a, 0) -> (a, 0)` with profile `(a tanh(a x / mu), 0)`.
pub fn quadratic(mu: f64) -> Result<FluxViscositySystem> {
    if !(mu > 0.0) {
        return Err(Error::InvalidInput("quadratic-model viscosity must be positive".into()));
    }
    FluxViscositySystem::builder("quadratic", 2, 2)
        .f1(|u, o| {
            o[0] = u[1] * u[1] - u[0] * u[0];
            o[1] = 2.0 * u[0] * u[1];
        })
        .df1(|u, o| {
            o[0] = -2.0 * u[0];
            o[1] = 2.0 * u[1];
            o[2] = 2.0 * u[1];
            o[3] = 2.0 * u[0];
        })
        .viscosity(move |_, o| {
            o[0] = mu;
            o[1] = 0.0;
            o[2] = 0.0;
            o[3] = mu;
        })
        .viscosity_derivative(|_, _, o| o.iter_mut().for_each(|v| *v = 0.0))
        .build()
}
