//! Solves the standing profiles of the built-in models and prints their
//! classification, structural assumptions and accuracy.
//!
//! `cargo run --release --example profile_solve`

use nalgebra::DVector;
use shocklab::models::{burgers, check_assumptions, quadratic, FluxViscositySystem};
use shocklab::profile::{endstate_characteristics, solve_profile, ProfileSettings};

fn report(model: &FluxViscositySystem, um: &[f64], up: &[f64], exact: impl Fn(f64) -> f64) -> shocklab::Result<()> {
    let (um, up) = (DVector::from_column_slice(um), DVector::from_column_slice(up));
    let ends = endstate_characteristics(model, &um, &up)?;
    let asm = check_assumptions(model, &um, &up)?;
    let profile = solve_profile(model, &um, &up, &ProfileSettings { halfwidth: 20.0, h: 0.01, ..Default::default() })?;
    let n = model.n();
    let err = profile.x.iter().enumerate().fold(0.0f64, |m, (i, x)| m.max((profile.u[i * n] - exact(*x)).abs()));
    println!("{}: {:?} (i- = {}, i+ = {})", model.name(), ends.shock_type, ends.i_minus, ends.i_plus);
    println!("  speeds a- = {:?}, a+ = {:?}", ends.a_minus, ends.a_plus);
    println!("  assumptions A1 {} A2 {:?} A3 {}", asm.a1_ok, asm.a2_ok, asm.a3_ok);
    println!("  {} nodes, tail rate {:.4}, max error against the closed form {err:.2e}", profile.x.len(), profile.tail_rate());
    Ok(())
}

fn main() -> shocklab::Result<()> {
    report(&burgers(1.0)?, &[1.0], &[-1.0], |x| -(0.5 * x).tanh())?;
    report(&quadratic(1.0)?, &[-0.5, 0.0], &[0.5, 0.0], |x| 0.5 * (0.5 * x).tanh())
}
