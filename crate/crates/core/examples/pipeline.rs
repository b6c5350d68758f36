//! Runs the full experiment pipeline on a configuration file and prints the
//! report gates.
//!
//! `cargo run --release --example pipeline -- [config.json] [out-dir]`

use std::path::{Path, PathBuf};

use shocklab::cli::{run_experiment, ExperimentConfig};

fn main() -> shocklab::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/burgers-smoke.json"));
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("shocklab-pipeline"));
    let config = ExperimentConfig::load(&path)?;
    let report = run_experiment(&config, &out, false);
    println!("{} -> {} ({:?}, exit code {})", path.display(), out.display(), report.status, report.exit_code());
    if let Some(f) = &report.failure {
        println!("  failed at {}: {}", f.stage, f.message);
    }
    for g in &report.gates {
        println!("  {:<24} {:>12.4e}  target {:>9.3e} tol {:.3e}  {}", g.name, g.value, g.target, g.tolerance, if g.pass { "pass" } else { "fail" });
    }
    Ok(())
}
