//! Functionals of a completed run: norms, kernel and least-squares phases,
//! `zeta`, vertical integrals, decay exponents and the damping monitor.

pub mod damping;
pub mod diagnostics;
pub mod fit;
pub mod kernel_phase;
pub mod norms;
pub mod phase;

pub use damping::{damping_constant, damping_monitor, damping_ratios, DampingReport, DampingSettings};
pub use diagnostics::{vertical_increment, vertical_integral, zeta_from_series, zeta_functional, VerticalSeries, ZetaSeries};
pub use fit::{fit_decay_exponent, ExponentFit};
pub use kernel_phase::{phase_extract_kernel, PhaseSeries, PhaseSettings, RemainderData};
pub use norms::{derivative, hs_norm, lp_norm, Norm, SnapshotNorms};
pub use phase::{brent_minimize, misfit, phase_extract_lsq, shift_field, GridProfile};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kernels::KernelE;
use crate::models::FluxViscositySystem;
use crate::sim::SimulationRun;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSettings {
    /// Fits use `t in [fit_start * T, T]`.
    pub fit_start: f64,
    pub phase_max_iter: usize,
    pub phase_tol: f64,
    pub damping_nu_count: usize,
    pub damping_nu_min: f64,
    pub damping_drift_tol: f64,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            fit_start: 0.125,
            phase_max_iter: 20,
            phase_tol: 1e-10,
            damping_nu_count: 100,
            damping_nu_min: 1e-2,
            damping_drift_tol: 0.1,
        }
    }
}

impl AnalysisSettings {
    pub fn phase(&self) -> PhaseSettings {
        PhaseSettings { max_iter: self.phase_max_iter, tol: self.phase_tol }
    }
    pub fn damping(&self) -> DampingSettings {
        DampingSettings { nu_count: self.damping_nu_count, nu_min: self.damping_nu_min, drift_tol: self.damping_drift_tol }
    }
}

/// Series, theoretical decay exponent and accepted deviation.
pub const DECAY_TARGETS: [(&str, f64, f64); 4] = [("l2", -0.25, 0.08), ("linf", -0.5, 0.12), ("hs", -0.25, 0.10), ("deltadot", -0.5, 0.15)];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayEntry {
    pub name: String,
    pub target: f64,
    pub tolerance: f64,
    pub fit: Option<ExponentFit>,
    pub error: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    pub phase: PhaseSeries,
    pub zeta: ZetaSeries,
    pub exponents: Vec<DecayEntry>,
    pub damping: DampingReport,
    /// `zeta(T) / zeta(T/2)`.
    pub zeta_ratio: f64,
    /// `vertical(x*, T) / vertical(x*, T/2)` per probe.
    pub vertical_ratio: Vec<(f64, f64)>,
}

/// Index of the last sample with `t <= t_end`.
pub fn index_at(times: &[f64], t_end: f64) -> usize {
    times.iter().take_while(|t| **t <= t_end + 1e-9).count().max(1) - 1
}

fn ratio(v: &[f64], times: &[f64]) -> f64 {
    let t = *times.last().unwrap();
    let (a, b) = (v[index_at(times, 0.5 * t)], *v.last().unwrap());
    if a == 0.0 && b == 0.0 {
        1.0
    } else {
        b / a
    }
}

/// Named scalar series used by the fits and plots.
pub fn series(run: &SimulationRun, phase: &PhaseSeries, name: &str) -> Option<Vec<f64>> {
    Some(match name {
        "l1" => run.norms.iter().map(|n| n.l1).collect(),
        "l2" => run.norms.iter().map(|n| n.l2).collect(),
        "l4" => run.norms.iter().map(|n| n.l4).collect(),
        "linf" => run.norms.iter().map(|n| n.linf).collect(),
        "wx_l2" => run.norms.iter().map(|n| n.wx_l2).collect(),
        "hs" => run.norms.iter().map(|n| n.hs).collect(),
        "delta" => phase.delta_kernel.iter().map(|v| v.abs()).collect(),
        "deltadot" => phase.deltadot_kernel.iter().map(|v| v.abs()).collect(),
        _ => return None,
    })
}

/// Runs every analysis on a completed run.
pub fn analyze(model: &FluxViscositySystem, run: &SimulationRun, kernel: &KernelE, settings: &AnalysisSettings) -> Result<Diagnostics> {
    let phase = phase_extract_kernel(model, run, kernel, &settings.phase())?;
    let zeta = zeta_functional(run, &phase);
    let t_end = *run.times.last().unwrap_or(&0.0);
    let window = (settings.fit_start * t_end, t_end);
    let exponents = DECAY_TARGETS
        .iter()
        .map(|&(name, target, tolerance)| {
            let values = series(run, &phase, name).expect("known series");
            match fit_decay_exponent(&run.times, &values, window) {
                Ok(f) => DecayEntry {
                    name: name.into(),
                    target,
                    tolerance,
                    pass: (f.exponent - target).abs() <= tolerance,
                    fit: Some(f),
                    error: None,
                },
                Err(e) => DecayEntry { name: name.into(), target, tolerance, fit: None, error: Some(e.to_string()), pass: false },
            }
        })
        .collect();
    let hs2: Vec<f64> = run.norms.iter().map(|n| n.hs * n.hs).collect();
    let drive: Vec<f64> =
        run.norms.iter().zip(&phase.deltadot_kernel).map(|(n, d)| n.l2 * n.l2 + d * d).collect();
    let damping = damping_monitor(&run.times, &hs2, &drive, &settings.damping())?;
    let zeta_ratio = ratio(&zeta.zeta, &run.times);
    let vertical_ratio = zeta.vertical.iter().map(|v| (v.x, ratio(&v.values, &run.times))).collect();
    Ok(Diagnostics { phase, zeta, exponents, damping, zeta_ratio, vertical_ratio })
}
