//! Power-law decay fits `v ~ C (1 + t)^p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentFit {
    pub exponent: f64,
    /// `ln C`.
    pub intercept: f64,
    /// Smallest and largest slope over dyadic subwindows.
    pub ci: (f64, f64),
    pub window: (f64, f64),
    pub points: usize,
}

fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn log_points(times: &[f64], values: &[f64], lo: f64, hi: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t >= lo - 1e-12 && t <= hi + 1e-12 {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!("non-positive value {v:.3e} at t = {t} in the fit window")));
            }
            xs.push((1.0 + t).ln());
            ys.push(v.ln());
        }
    }
    Ok((xs, ys))
}

/// Least-squares slope of `ln v` against `ln(1 + t)` over `window`, with the
/// spread of slopes over the dyadic subwindows `[lo, 2 lo], [2 lo, 4 lo], ...`
/// as confidence interval.
pub fn fit_decay_exponent(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<ExponentFit> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), got: values.len() });
    }
    let (lo, hi) = window;
    let (xs, ys) = log_points(times, values, lo, hi)?;
    if xs.len() < 2 {
        return Err(Error::InvalidInput("fit window holds fewer than two samples".into()));
    }
    let (slope, intercept) = ols(&xs, &ys);
    let mut ci = (slope, slope);
    if lo > 0.0 {
        let mut a = lo;
        while a < hi * (1.0 - 1e-12) {
            let b = (2.0 * a).min(hi);
            let (sx, sy) = log_points(times, values, a, b)?;
            if sx.len() >= 3 {
                let (s, _) = ols(&sx, &sy);
                ci = (ci.0.min(s), ci.1.max(s));
            }
            a = b;
        }
    }
    Ok(ExponentFit { exponent: slope, intercept, ci, window, points: xs.len() })
}
