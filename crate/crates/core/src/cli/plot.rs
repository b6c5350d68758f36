//! Whitespace-separated tables for gnuplot.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use crate::analysis::{index_at, series, Diagnostics, DECAY_TARGETS};
use crate::error::Result;
use crate::sim::SimulationRun;
use crate::spectral::{ContourRun, EvansContourResult};

/// A completed run with its diagnostics, labelled for file naming.
pub struct PlotRun<'a> {
    pub label: &'a str,
    pub run: &'a SimulationRun,
    pub diag: &'a Diagnostics,
}

fn slope_name(p: f64) -> &'static str {
    match p {
        p if p == -0.25 => "-1/4",
        p if p == -0.5 => "-1/2",
        _ => "?",
    }
}

fn file_name(label: &str, stem: &str) -> String {
    if label.is_empty() {
        format!("{stem}.dat")
    } else {
        format!("{label}_{stem}.dat")
    }
}

fn row(out: &mut String, vals: &[f64]) {
    let line: Vec<String> = vals.iter().map(|v| format!("{v:.10e}")).collect();
    out.push_str(&line.join(" "));
    out.push('\n');
}

/// Norm decay with reference power laws anchored at the fit window start.
fn decay_table(r: &PlotRun, fit_start: f64) -> String {
    let times = &r.run.times;
    let t_end = *times.last().unwrap_or(&0.0);
    let anchor = index_at(times, fit_start * t_end);
    let mut out = String::new();
    let _ = writeln!(out, "# norm decay of the centered perturbation; ref_* columns are the theoretical power laws in (1+t)");
    let mut cols = vec!["t".to_string(), "1+t".to_string()];
    let mut data = Vec::new();
    let mut refs = Vec::new();
    for (name, target, _) in DECAY_TARGETS {
        let v = series(r.run, &r.diag.phase, name).expect("known series");
        cols.push(name.to_string());
        refs.push((name, target, v[anchor]));
        data.push(v);
    }
    for (name, target, _) in &refs {
        cols.push(format!("ref_{name}(slope={})", slope_name(*target)));
    }
    let _ = writeln!(out, "# {}", cols.join(" "));
    let t_a = times[anchor];
    for (k, t) in times.iter().enumerate() {
        let mut vals = vec![*t, 1.0 + t];
        vals.extend(data.iter().map(|d| d[k]));
        vals.extend(refs.iter().map(|(_, p, v0)| v0 * ((1.0 + t) / (1.0 + t_a)).powf(*p)));
        row(&mut out, &vals);
    }
    out
}

fn delta_table(r: &PlotRun) -> String {
    let ph = &r.diag.phase;
    let mut out = String::from("# t delta_kernel delta_lsq discrepancy\n");
    for k in 0..ph.times.len() {
        row(&mut out, &[ph.times[k], ph.delta_kernel[k], ph.delta_lsq[k], ph.discrepancy[k]]);
    }
    out
}

fn deltadot_table(r: &PlotRun) -> String {
    let ph = &r.diag.phase;
    let mut out = String::from("# t deltadot deltadot*(1+t)^(1/2)\n");
    for (t, d) in ph.times.iter().zip(&ph.deltadot_kernel) {
        row(&mut out, &[*t, *d, d * (1.0 + t).sqrt()]);
    }
    out
}

fn vertical_table(r: &PlotRun) -> String {
    let z = &r.diag.zeta;
    let mut out = String::from("# t zeta vertical_grid_sup");
    for v in &z.vertical {
        let _ = write!(out, " vertical@x={}", v.x);
    }
    out.push('\n');
    for k in 0..z.times.len() {
        let mut vals = vec![z.times[k], z.zeta[k], z.vertical_grid_sup[k]];
        vals.extend(z.vertical.iter().map(|v| v.values[k]));
        row(&mut out, &vals);
    }
    out
}

fn contour_block(out: &mut String, name: &str, c: &ContourRun) {
    let _ = writeln!(out, "# {name}: winding {}", c.winding);
    let _ = writeln!(out, "# re_lambda im_lambda re_D im_D cumulative_arg");
    for k in 0..c.points.len() {
        row(out, &[c.points[k].re, c.points[k].im, c.values[k].re, c.values[k].im, c.cumulative_arg[k]]);
    }
    out.push_str("\n\n");
}

/// Image of the two Evans contours; gnuplot `index 0` and `index 1`.
pub fn emit_evans_plot(dir: &Path, result: &EvansContourResult) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut out = String::new();
    contour_block(&mut out, "excised half-disk", &result.excised);
    contour_block(&mut out, "small circle", &result.small_circle);
    let path = dir.join("evans_contour.dat");
    fs::write(&path, out)?;
    Ok(path)
}

/// Writes decay, phase, weighted phase-rate and vertical tables for each
/// run. An empty list writes nothing.
pub fn emit_plotdata(dir: &Path, runs: &[PlotRun], fit_start: f64) -> Result<Vec<PathBuf>> {
    if runs.is_empty() {
        warn!("no runs to plot");
        return Ok(Vec::new());
    }
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for r in runs {
        for (stem, text) in [
            ("decay", decay_table(r, fit_start)),
            ("delta", delta_table(r)),
            ("deltadot", deltadot_table(r)),
            ("vertical", vertical_table(r)),
        ] {
            let path = dir.join(file_name(r.label, stem));
            fs::write(&path, text)?;
            paths.push(path);
        }
    }
    Ok(paths)
}
