//! Sweeps the perturbation amplitude on the Burgers shock and prints the
//! scaled phase functional and the gap between the two phase extractors.
//!
//! `cargo run --release --example amplitude_sweep -- [T]`

use std::path::Path;

use rayon::prelude::*;
use shocklab::cli::{prepare, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t_final: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50.0);
    let base = ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/burgers-lax.json"))?;
    let prepared = prepare(&base)?;
    let rows: Vec<_> = [2.5e-3, 5e-3, 1e-2, 2e-2]
        .par_iter()
        .map(|&eps| {
            let mut c = base.clone();
            c.simulation.t_final = t_final;
            c.simulation.perturbation.amplitude = eps;
            let run = prepared.simulate(&c)?;
            let diag = prepared.analyze(&c, &run)?;
            Ok((eps, *diag.zeta.zeta.last().unwrap(), diag.phase.max_discrepancy))
        })
        .collect::<Result<_, shocklab::cli::StageError>>()?;
    println!("{:>8} {:>12} {:>14}", "eps", "zeta(T)/eps", "max|dk - dl|");
    for (eps, z, d) in rows {
        println!("{eps:>8} {:>12.6} {d:>14.4e}", z / eps);
    }
    Ok(())
}
