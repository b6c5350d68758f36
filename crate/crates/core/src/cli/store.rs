//! On-disk formats: snapshot CSV chunks with a JSON index, series CSV files
//! and JSON documents. Floats are written in shortest round-trip form.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, FORMAT_VERSION};
use crate::analysis::Diagnostics;
use crate::error::{Error, Result};
use crate::profile::ShockProfile;
use crate::sim::SimulationRun;

/// Snapshots per CSV chunk.
pub const CHUNK_SNAPSHOTS: usize = 25;

pub const INDEX_FILE: &str = "run.idx.json";

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes a CSV table with one header row.
pub fn write_table(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| num(*v))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Index of a stored run; the perturbation history lives in the chunks.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunIndex {
    pub format_version: u32,
    pub config_hash: String,
    pub config: ExperimentConfig,
    /// Chunk files relative to the index, in time order.
    pub chunks: Vec<String>,
    pub chunk_snapshots: usize,
    /// The run with an empty `w`.
    pub run: SimulationRun,
}

/// `x, U_1..U_n, W_1..W_n, U'_1..U'_n` per node.
pub fn write_profile(path: &Path, profile: &ShockProfile) -> Result<()> {
    let n = profile.n;
    let mut header = vec!["x".to_string()];
    header.extend((0..n).map(|c| format!("u{c}")));
    header.extend((0..n).map(|c| format!("w{c}")));
    header.extend((0..n).map(|c| format!("du{c}")));
    let rows = (0..profile.len()).map(|i| {
        let mut r = vec![profile.x[i]];
        r.extend_from_slice(profile.u_at(i));
        r.extend_from_slice(profile.w_at(i));
        r.extend_from_slice(profile.du_at(i));
        r
    });
    write_table(path, &header, rows)
}

/// Stores `run` under `dir` and returns the index path.
pub fn save_run(dir: &Path, config: &ExperimentConfig, run: &SimulationRun) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let width = run.w.first().map_or(0, |w| w.len());
    let mut header = vec!["t".to_string()];
    header.extend((0..width).map(|k| format!("w{k}")));
    let mut chunks = Vec::new();
    for (c, start) in (0..run.w.len()).step_by(CHUNK_SNAPSHOTS).enumerate() {
        let name = format!("snapshots_{c:04}.csv");
        let end = (start + CHUNK_SNAPSHOTS).min(run.w.len());
        let rows = (start..end).map(|k| {
            let mut r = Vec::with_capacity(width + 1);
            r.push(run.times[k]);
            r.extend_from_slice(&run.w[k]);
            r
        });
        write_table(&dir.join(&name), &header, rows)?;
        chunks.push(name);
    }
    let mut bare = run.clone();
    bare.w = Vec::new();
    let index = RunIndex {
        format_version: FORMAT_VERSION,
        config_hash: config.hash(),
        config: config.clone(),
        chunks,
        chunk_snapshots: CHUNK_SNAPSHOTS,
        run: bare,
    };
    let path = dir.join(INDEX_FILE);
    write_json(&path, &index)?;
    Ok(path)
}

/// Reads a run back from its index.
pub fn load_run(index_path: &Path) -> Result<(ExperimentConfig, SimulationRun)> {
    let text = fs::read_to_string(index_path)?;
    let index: RunIndex = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", index_path.display())))?;
    if index.format_version != FORMAT_VERSION {
        return Err(Error::Config(format!("run index format_version {} is not supported", index.format_version)));
    }
    let dir = index_path.parent().unwrap_or(Path::new("."));
    let mut run = index.run;
    let width = run.profile.len();
    for name in &index.chunks {
        let mut rdr = csv::Reader::from_path(dir.join(name)).map_err(csv_err)?;
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Config(format!("{name}: {e}"))))
                .collect::<Result<_>>()?;
            if vals.len() != width + 1 {
                return Err(Error::DimensionMismatch { expected: width + 1, got: vals.len() });
            }
            let k = run.w.len();
            if run.times.get(k) != Some(&vals[0]) {
                return Err(Error::Config(format!("{name}: snapshot time {} does not match the index", vals[0])));
            }
            run.w.push(vals[1..].to_vec());
        }
    }
    if run.w.len() != run.times.len() {
        return Err(Error::Config(format!("run has {} snapshots but {} times", run.w.len(), run.times.len())));
    }
    Ok((index.config, run))
}

/// Per-snapshot norms, phase and station values of a run.
pub fn write_series(path: &Path, run: &SimulationRun) -> Result<()> {
    let n = run.n;
    let mut header: Vec<String> =
        ["t", "l1", "l2", "l4", "linf", "wx_l2", "wx_l4", "wx_linf", "hs", "delta_lsq", "boundary"].map(String::from).to_vec();
    for x in &run.probes {
        header.extend((0..n).map(|c| format!("w{c}@{x}")));
    }
    let rows = (0..run.times.len()).map(|k| {
        let m = &run.norms[k];
        let mut r = vec![run.times[k], m.l1, m.l2, m.l4, m.linf, m.wx_l2, m.wx_l4, m.wx_linf, m.hs, run.delta_lsq[k], run.boundary_activity[k]];
        r.extend_from_slice(&run.stations[k]);
        r
    });
    write_table(path, &header, rows)
}

/// Phase, `zeta` and vertical integrals per snapshot.
pub fn write_diagnostics_csv(path: &Path, diag: &Diagnostics) -> Result<()> {
    let ph = &diag.phase;
    let z = &diag.zeta;
    let mut header: Vec<String> = [
        "t",
        "delta_kernel",
        "deltadot_kernel",
        "delta_lsq",
        "discrepancy",
        "picard_sweeps",
        "zeta",
        "vertical_probe_max",
        "vertical_grid_sup",
    ]
    .map(String::from)
    .to_vec();
    header.extend(z.vertical.iter().map(|v| format!("vertical@{}", v.x)));
    let rows = (0..ph.times.len()).map(|k| {
        let mut r = vec![
            ph.times[k],
            ph.delta_kernel[k],
            ph.deltadot_kernel[k],
            ph.delta_lsq[k],
            ph.discrepancy[k],
            ph.iterations[k] as f64,
            z.zeta[k],
            z.vertical_probe_max[k],
            z.vertical_grid_sup[k],
        ];
        r.extend(z.vertical.iter().map(|v| v.values[k]));
        r
    });
    write_table(path, &header, rows)
}
