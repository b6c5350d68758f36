//! Perturbs a standing shock, integrates to `T` and prints the decay
//! diagnostics.
//!
//! `cargo run --release --example decay_run -- [burgers|quadratic] [T] [eps]`

use std::time::Instant;

use nalgebra::DVector;
use shocklab::analysis::{analyze, AnalysisSettings};
use shocklab::kernels::{KernelE, LMode};
use shocklab::models::{burgers, quadratic};
use shocklab::profile::{characteristic_data, solve_profile, ProfileSettings};
use shocklab::sim::{run_simulation, SimulationConfig};

fn main() -> shocklab::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("burgers");
    let t_final: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(200.0);
    let eps: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1e-2);
    let (model, um, up) = match which {
        "quadratic" => (quadratic(1.0)?, vec![-0.5, 0.0], vec![0.5, 0.0]),
        _ => (burgers(1.0)?, vec![1.0], vec![-1.0]),
    };
    let set = ProfileSettings { halfwidth: 40.0, h: 0.01, ..Default::default() };
    let profile = solve_profile(&model, &DVector::from_vec(um), &DVector::from_vec(up), &set)?;
    let mut config = SimulationConfig { t_final, ..Default::default() };
    config.perturbation.amplitude = eps;
    if model.n() == 2 {
        // the v component is outgoing at both endstates
        config.perturbation.direction = Some(vec![0.0, 1.0]);
    }
    let start = Instant::now();
    let run = run_simulation(&model, &profile, &config)?;
    println!(
        "{}: X = {}, {} nodes, dt = {:.4}, {} steps in {:.1?}",
        model.name(),
        run.halfwidth,
        run.len(),
        run.dt,
        run.steps,
        start.elapsed()
    );
    println!("ledger residual per unit time {:.3e}", run.ledger.residual_per_time);
    let cd = characteristic_data(&model, &profile)?;
    let kernel = KernelE::from_characteristics(&cd, &profile, LMode::Auto)?;
    let start = Instant::now();
    let diag = analyze(&model, &run, &kernel, &AnalysisSettings::default())?;
    println!("analysis in {:.1?}", start.elapsed());
    for e in &diag.exponents {
        match &e.fit {
            Some(f) => println!(
                "  {:>8}: exponent {:+.4} (ci {:+.3} .. {:+.3}), target {:+.2} +- {:.2}  {}",
                e.name,
                f.exponent,
                f.ci.0,
                f.ci.1,
                e.target,
                e.tolerance,
                if e.pass { "ok" } else { "off" }
            ),
            None => println!("  {:>8}: {}", e.name, e.error.as_deref().unwrap_or("")),
        }
    }
    println!("zeta(T)/zeta(T/2) = {:.4}, zeta(T) = {:.4e}", diag.zeta_ratio, diag.zeta.zeta.last().unwrap());
    for (x, r) in &diag.vertical_ratio {
        println!("  vertical at {x:+}: ratio {r:.4}");
    }
    println!(
        "damping: C = {:.4e} at nu = {:.3}, drift {:.2}%",
        diag.damping.constant,
        diag.damping.nu,
        100.0 * diag.damping.drift
    );
    println!("max |delta_kernel - delta_lsq| = {:.4e}", diag.phase.max_discrepancy);
    let k = run.times.len() - 1;
    println!(
        "final: delta_lsq = {:.5e}, delta_kernel = {:.5e}, deltadot = {:.3e}",
        run.delta_lsq[k], diag.phase.delta_kernel[k], diag.phase.deltadot_kernel[k]
    );
    for k in [1, 10, 50, 100, 200, 400].into_iter().filter(|k| *k < run.times.len()) {
        println!(
            "  t = {:>5}: L2 {:.3e}  Linf {:.3e}  H4 {:.3e}  dlsq {:+.4e}  dker {:+.4e}  ddot {:+.3e}  edge {:.1e}",
            run.times[k], run.norms[k].l2, run.norms[k].linf, run.norms[k].hs, run.delta_lsq[k], diag.phase.delta_kernel[k],
            diag.phase.deltadot_kernel[k], run.boundary_activity[k]
        );
    }
    Ok(())
}
