//! The `zeta` functional and the vertical estimate.

use serde::{Deserialize, Serialize};

use super::norms::{Norm, SnapshotNorms};

/// `∫_0^{t_k} (1 + s)^{-1/2} v(s) ds` by the cumulative trapezoid rule.
pub fn vertical_integral(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for k in 0..times.len() {
        if k > 0 {
            acc += vertical_increment(times, values, k - 1, k);
        }
        out.push(acc);
    }
    out
}

/// The part of the vertical integral between `times[i]` and `times[j]`.
pub fn vertical_increment(times: &[f64], values: &[f64], i: usize, j: usize) -> f64 {
    let g = |k: usize| values[k].abs() / (1.0 + times[k]).sqrt();
    (i..j).map(|k| 0.5 * (times[k + 1] - times[k]) * (g(k) + g(k + 1))).sum()
}

/// Sampled exponents `p` of the supremum over `2 <= p <= inf`.
pub const ZETA_NORMS: [Norm; 3] = [Norm::L2, Norm::L4, Norm::Inf];

/// `(|w|_p + |w_x|_p) (1 + s)^{(1 - 1/p) / 2}`, maximized over the sampled
/// `p`.
pub fn weighted_norm_term(norms: &SnapshotNorms, s: f64) -> f64 {
    ZETA_NORMS
        .iter()
        .map(|&p| {
            let (a, b) = norms.pair(p);
            (a + b) * (1.0 + s).powf(0.5 * (1.0 - p.inverse_exponent()))
        })
        .fold(0.0, f64::max)
}

/// Running supremum of the weighted norms, `|delta|`, `|delta'| (1+s)^{1/2}`
/// and the vertical integral.
pub fn zeta_from_series(times: &[f64], norms: &[SnapshotNorms], delta: &[f64], deltadot: &[f64], vertical: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut sup = 0.0f64;
    for (k, &s) in times.iter().enumerate() {
        let v = weighted_norm_term(&norms[k], s) + delta[k].abs() + deltadot[k].abs() * (1.0 + s).sqrt() + vertical[k];
        sup = sup.max(v);
        out.push(sup);
    }
    out
}

/// Vertical integral at one probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerticalSeries {
    pub x: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZetaSeries {
    pub times: Vec<f64>,
    pub zeta: Vec<f64>,
    pub vertical: Vec<VerticalSeries>,
    /// Largest probe value of the vertical integral, the term entering `zeta`.
    pub vertical_probe_max: Vec<f64>,
    /// Supremum over grid points of the vertical integral.
    pub vertical_grid_sup: Vec<f64>,
}

/// Assembles `zeta` from the run's norms, stations and a phase series.
pub fn zeta_functional(run: &crate::sim::SimulationRun, phase: &super::PhaseSeries) -> ZetaSeries {
    let times = &run.times;
    let vertical: Vec<VerticalSeries> = run
        .probes
        .iter()
        .enumerate()
        .map(|(j, &x)| VerticalSeries { x, values: vertical_integral(times, &run.station_abs(j)) })
        .collect();
    let probe_max: Vec<f64> =
        (0..times.len()).map(|k| vertical.iter().fold(0.0f64, |m, v| m.max(v.values[k]))).collect();
    let (n, len) = (run.n, run.len());
    let mut acc = vec![0.0; len];
    let mut grid_sup = Vec::with_capacity(times.len());
    let pointwise = |w: &[f64], i: usize| w[i * n..(i + 1) * n].iter().map(|v| v * v).sum::<f64>().sqrt();
    for k in 0..times.len() {
        if k > 0 {
            let dt = times[k] - times[k - 1];
            let (a, b) = ((1.0 + times[k - 1]).sqrt(), (1.0 + times[k]).sqrt());
            for (i, v) in acc.iter_mut().enumerate() {
                *v += 0.5 * dt * (pointwise(&run.w[k - 1], i) / a + pointwise(&run.w[k], i) / b);
            }
        }
        grid_sup.push(acc.iter().fold(0.0f64, |m, v| m.max(*v)));
    }
    let zeta = zeta_from_series(times, &run.norms, &phase.delta_kernel, &phase.deltadot_kernel, &probe_max);
    ZetaSeries { times: times.clone(), zeta, vertical, vertical_probe_max: probe_max, vertical_grid_sup: grid_sup }
}
