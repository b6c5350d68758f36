//! Simulates once, stores the run on disk, reloads it and analyzes the
//! reloaded copy, writing gnuplot tables next to it.
//!
//! `cargo run --release --example stored_run -- [out-dir]`

use std::path::{Path, PathBuf};

use shocklab::cli::{emit_plotdata, load_run, prepare, save_run, ExperimentConfig, PlotRun};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("shocklab-stored"));
    let config = ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/burgers-smoke.json"))?;
    let prepared = prepare(&config)?;
    let run = prepared.simulate(&config)?;
    let idx = save_run(&out.join("run"), &config, &run)?;
    println!("stored {} snapshots at {}", run.times.len(), idx.display());

    let (config, back) = load_run(&idx)?;
    assert_eq!(back.w, run.w, "stored snapshots reload exactly");
    let prepared = prepare(&config)?;
    let diag = prepared.analyze(&config, &back)?;
    for e in &diag.exponents {
        println!("  {:>8}: {:?}", e.name, e.fit.as_ref().map(|f| f.exponent));
    }
    let plots = [PlotRun { label: "", run: &back, diag: &diag }];
    for p in emit_plotdata(&out.join("plotdata"), &plots, config.analysis.fit_start)? {
        println!("  wrote {}", p.display());
    }
    Ok(())
}
