//! Traces the time-integrated moving-Gaussian bounds for a Gaussian source
//! and prints the running suprema and their late-time growth.

use shocklab::kernels::{verify_aux_bounds, AuxSettings, TestFunction};

fn main() -> shocklab::Result<()> {
    let start = std::time::Instant::now();
    let report = verify_aux_bounds(&AuxSettings::default(), &TestFunction::gaussian())?;
    for e in &report.entries {
        let station = e.station.map(|x| format!(" x = {x:+}")).unwrap_or_default();
        println!(
            "{}{}: final lhs {:.6e}, running sup {:.6e}, growth over x{} {:.2}%  {}",
            e.name,
            station,
            e.lhs.last().unwrap(),
            e.running_sup.last().unwrap(),
            e.window,
            100.0 * e.growth,
            if e.bounded { "bounded" } else { "GROWING" }
        );
        for (t, v) in e.times.iter().zip(&e.lhs).filter(|(t, _)| (t.log10().fract()).abs() < 1e-9) {
            println!("    t = {t:.0e}: {v:.6e}");
        }
    }
    println!("elapsed {:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}
