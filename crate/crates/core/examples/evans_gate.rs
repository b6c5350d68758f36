//! Winding numbers of the Evans function for the Burgers shock around the
//! excised half-disk and a small circle about the origin.
//!
//! `cargo run --release --example evans_gate -- [R]`

use nalgebra::DVector;
use num_complex::Complex64;
use shocklab::models::burgers;
use shocklab::profile::{solve_profile, ProfileSettings};
use shocklab::spectral::{verify_condition_d, Evans, EvansSettings, WindingSettings};

fn main() -> shocklab::Result<()> {
    let big: Option<f64> = std::env::args().nth(1).and_then(|s| s.parse().ok());
    let model = burgers(1.0)?;
    let set = ProfileSettings { halfwidth: 20.0, h: 0.01, ..Default::default() };
    let profile = solve_profile(&model, &DVector::from_vec(vec![1.0]), &DVector::from_vec(vec![-1.0]), &set)?;
    let evans = Evans::new(&model, &profile, EvansSettings::default())?;
    for lambda in [Complex64::new(1.0, 0.0), Complex64::new(0.5, 2.0), Complex64::new(1e-3, 0.0)] {
        println!("D({lambda}) = {:.6e}", evans.eval(lambda)?);
    }
    let r = verify_condition_d(&evans, big, 1e-3, &WindingSettings::default())?;
    println!(
        "R = {} (heuristic {}), rho = {}: winding {} on the excised contour ({} points), {} on the small circle",
        r.big_radius,
        r.big_radius_heuristic,
        r.small_radius,
        r.excised.winding,
        r.excised.points.len(),
        r.small_circle.winding
    );
    println!("|D(0)| / max|D| = {:.3e}, verdict {:?}", r.origin_relative, r.verdict);
    for n in &r.notes {
        println!("  note: {n}");
    }
    Ok(())
}
