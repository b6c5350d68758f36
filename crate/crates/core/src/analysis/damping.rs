//! Fitted constants for the damping inequality
//! `H(t) <= C (H(0) e^{-nu t} + ∫_0^t e^{-nu (t - s)} g(s) ds)` with
//! `H = |w|_{H^s}^2` and `g = |w|_{L^2}^2 + |delta'|^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DampingSettings {
    /// Number of `nu` values, spread geometrically over `[nu_min, 1]`.
    pub nu_count: usize,
    pub nu_min: f64,
    /// Largest accepted growth of `C` from the first half of the series to
    /// all of it.
    pub drift_tol: f64,
}

impl Default for DampingSettings {
    fn default() -> Self {
        DampingSettings { nu_count: 100, nu_min: 1e-2, drift_tol: 0.1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DampingReport {
    pub nu: f64,
    /// Smallest `C` over `[0, T]`.
    pub constant: f64,
    /// Smallest `C` over `[0, T/2]` at the same `nu`.
    pub constant_half: f64,
    pub drift: f64,
    /// First time where the ratio exceeds `constant_half (1 + drift_tol)`.
    pub violation: Option<f64>,
    pub pass: bool,
}

/// `H_k / (H_0 e^{-nu t_k} + ∫_0^{t_k} e^{-nu (t_k - s)} g)` at every sample;
/// the integral is the trapezoid rule on the exponentially weighted `g`.
pub fn damping_ratios(times: &[f64], hs2: &[f64], drive: &[f64], nu: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut mem = 0.0;
    for k in 0..times.len() {
        if k > 0 {
            let dt = times[k] - times[k - 1];
            let decay = (-nu * dt).exp();
            mem = decay * mem + 0.5 * dt * (decay * drive[k - 1] + drive[k]);
        }
        let rhs = hs2[0] * (-nu * times[k]).exp() + mem;
        out.push(if hs2[k] == 0.0 {
            0.0
        } else if rhs > 0.0 {
            hs2[k] / rhs
        } else {
            f64::INFINITY
        });
    }
    out
}

/// Smallest `C` over the samples with `t <= t_end` at fixed `nu`.
pub fn damping_constant(times: &[f64], hs2: &[f64], drive: &[f64], nu: f64, t_end: f64) -> f64 {
    let r = damping_ratios(times, hs2, drive, nu);
    let c = times.iter().zip(&r).filter(|(t, _)| **t <= t_end + 1e-9).fold(0.0f64, |m, (_, v)| m.max(*v));
    if c == 0.0 {
        1.0
    } else {
        c
    }
}

/// Scans `nu`, keeps the one with the smallest `C` over the whole series and
/// compares with the first half.
pub fn damping_monitor(times: &[f64], hs2: &[f64], drive: &[f64], settings: &DampingSettings) -> Result<DampingReport> {
    if times.is_empty() || hs2.len() != times.len() || drive.len() != times.len() {
        return Err(Error::InvalidInput("damping monitor needs equal-length non-empty series".into()));
    }
    if hs2.iter().chain(drive).any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::NonFinite("damping series"));
    }
    let t_end = *times.last().unwrap();
    if hs2.iter().all(|v| *v == 0.0) {
        return Ok(DampingReport { nu: 1.0, constant: 1.0, constant_half: 1.0, drift: 0.0, violation: None, pass: true });
    }
    let m = settings.nu_count.max(2);
    let mut best = (f64::INFINITY, 1.0);
    for i in 0..m {
        let nu = settings.nu_min * (1.0 / settings.nu_min).powf(i as f64 / (m - 1) as f64);
        let c = damping_constant(times, hs2, drive, nu, t_end);
        if c < best.0 {
            best = (c, nu);
        }
    }
    let (constant, nu) = best;
    let constant_half = damping_constant(times, hs2, drive, nu, 0.5 * t_end);
    let drift = if constant_half > 0.0 { (constant - constant_half) / constant_half } else { f64::INFINITY };
    let bound = constant_half * (1.0 + settings.drift_tol);
    let violation = if constant.is_finite() && drift < settings.drift_tol {
        None
    } else {
        damping_ratios(times, hs2, drive, nu).iter().zip(times).find(|(r, _)| **r > bound).map(|(_, t)| *t)
    };
    Ok(DampingReport { nu, constant, constant_half, drift, pass: violation.is_none(), violation })
}
