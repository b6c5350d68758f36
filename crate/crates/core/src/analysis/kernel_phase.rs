//! Phase `delta(t)` and its rate from the excited-translation kernel:
//!
//! `delta(t) = -∫ e(y,t) w0 dy + ∫_0^t ∫ e_y(y, t-s) S(y,s) dy ds`,
//! `S = Q(w, w_x) + delta' w`, and the same with `e_t`, `e_yt` for
//! `delta'`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelE;
use crate::models::FluxViscositySystem;
use crate::profile::fd_derivative_field;
use crate::sim::SimulationRun;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseSettings {
    /// Picard sweeps allowed per step for the `delta'` closure.
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for PhaseSettings {
    fn default() -> Self {
        PhaseSettings { max_iter: 20, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PhaseSeries {
    pub times: Vec<f64>,
    pub delta_kernel: Vec<f64>,
    pub deltadot_kernel: Vec<f64>,
    pub delta_lsq: Vec<f64>,
    /// `|delta_kernel - delta_lsq|`.
    pub discrepancy: Vec<f64>,
    /// Picard sweeps used at each step.
    pub iterations: Vec<usize>,
    pub delta_sup: f64,
    /// `sup |delta'(s)| (1 + s)^{1/2}`.
    pub deltadot_weighted_sup: f64,
    pub max_discrepancy: f64,
}

/// Profile-dependent pieces of the quadratic remainder, per node.
pub struct RemainderData {
    n: usize,
    h: f64,
    wbar: Vec<f64>,
    wbar_x: Vec<f64>,
    fbar: Vec<f64>,
    dfbar: Vec<DMatrix<f64>>,
    bbar: Vec<DMatrix<f64>>,
    /// `dB~(W̄)/dW_k` per node, `n` matrices each.
    dbbar: Vec<Vec<DMatrix<f64>>>,
}

impl RemainderData {
    pub fn new(model: &FluxViscositySystem, wbar: &[f64], h: f64) -> Result<RemainderData> {
        let n = model.n();
        let len = wbar.len() / n;
        let mut fbar = vec![0.0; len * n];
        let mut dfbar = Vec::with_capacity(len);
        let mut bbar = Vec::with_capacity(len);
        let mut dbbar = Vec::with_capacity(len);
        let mut u = vec![0.0; n];
        for i in 0..len {
            model.u_from_w(&wbar[i * n..(i + 1) * n], &mut u)?;
            model.f1_into(&u, &mut fbar[i * n..(i + 1) * n]);
            let uv = DVector::from_column_slice(&u);
            dfbar.push(model.dftilde_at_u(&uv));
            bbar.push(model.btilde_at_u(&uv));
            dbbar.push(
                (0..n)
                    .map(|k| {
                        let mut e = DVector::zeros(n);
                        e[k] = 1.0;
                        model.dbtilde_dir_at_u(&uv, &e)
                    })
                    .collect(),
            );
        }
        Ok(RemainderData { n, h, wbar: wbar.to_vec(), wbar_x: fd_derivative_field(wbar, n, h), fbar, dfbar, bbar, dbbar })
    }

    /// `Q(w, w_x)`: the flux and viscous-flux Taylor remainders beyond the
    /// linearization about `W̄`.
    pub fn q(&self, model: &FluxViscositySystem, w: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let len = self.wbar.len() / n;
        if w.len() != len * n {
            return Err(Error::DimensionMismatch { expected: len * n, got: w.len() });
        }
        let wx = fd_derivative_field(w, n, self.h);
        let mut out = vec![0.0; len * n];
        let mut u = vec![0.0; n];
        let mut wt = vec![0.0; n];
        let mut f = vec![0.0; n];
        for i in 0..len {
            let wi = &w[i * n..(i + 1) * n];
            if wi.iter().all(|v| *v == 0.0) && wx[i * n..(i + 1) * n].iter().all(|v| *v == 0.0) {
                continue;
            }
            for c in 0..n {
                wt[c] = self.wbar[i * n + c] + wi[c];
            }
            model.u_from_w(&wt, &mut u)?;
            model.f1_into(&u, &mut f);
            let bt = model.btilde_at_u(&DVector::from_column_slice(&u));
            let wv = DVector::from_column_slice(wi);
            let wxv = DVector::from_column_slice(&wx[i * n..(i + 1) * n]);
            let wbx = DVector::from_column_slice(&self.wbar_x[i * n..(i + 1) * n]);
            let lin_f = &self.dfbar[i] * &wv;
            let mut db = DMatrix::zeros(n, n);
            for k in 0..n {
                if wi[k] != 0.0 {
                    db += &self.dbbar[i][k] * wi[k];
                }
            }
            let visc = &bt * (&wbx + &wxv) - &self.bbar[i] * &wbx - &self.bbar[i] * &wxv - db * &wbx;
            for c in 0..n {
                out[i * n + c] = -(f[c] - self.fbar[i * n + c] - lin_f[c]) + visc[c];
            }
        }
        Ok(out)
    }
}

/// Kernel rows `(e_y, e_yt)` at lag `tau` on every node.
fn kernel_row(kernel: &KernelE, x0: f64, h: f64, len: usize, tau: f64) -> (Vec<f64>, Vec<f64>) {
    let n = kernel.n;
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..len)
        .into_par_iter()
        .map(|i| {
            let v = kernel.eval(x0 + i as f64 * h, tau);
            (v.e_y, v.e_yt)
        })
        .collect();
    let mut ey = Vec::with_capacity(len * n);
    let mut eyt = Vec::with_capacity(len * n);
    for (a, b) in rows {
        ey.extend(a);
        eyt.extend(b);
    }
    (ey, eyt)
}

/// Trapezoid weights in `y` on `len` nodes.
fn y_weight(i: usize, len: usize, h: f64) -> f64 {
    if i == 0 || i + 1 == len {
        0.5 * h
    } else {
        h
    }
}

fn pair_integral(kernel_row: &[f64], field: &[f64], n: usize, h: f64) -> f64 {
    let len = field.len() / n;
    let mut s = 0.0;
    for i in 0..len {
        let mut dot = 0.0;
        for c in 0..n {
            dot += kernel_row[i * n + c] * field[i * n + c];
        }
        s += y_weight(i, len, h) * dot;
    }
    s
}

/// `(-∫ e(y,t) w0, -∫ e_t(y,t) w0)`.
fn linear_terms(kernel: &KernelE, run: &SimulationRun, t: f64) -> (f64, f64) {
    let (n, len, h) = (run.n, run.len(), run.h);
    // collected before summing so the result does not depend on scheduling
    let terms: Vec<(f64, f64)> = (0..len)
        .into_par_iter()
        .map(|i| {
            let v = kernel.eval(run.x(i), t);
            let wt = y_weight(i, len, h);
            let w = &run.w0[i * n..(i + 1) * n];
            let d: f64 = (0..n).map(|c| v.e[c] * w[c]).sum();
            let dt: f64 = (0..n).map(|c| v.e_t[c] * w[c]).sum();
            (wt * d, wt * dt)
        })
        .collect();
    let (a, b) = terms.iter().fold((0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1));
    (-a, -b)
}

/// Snapshot spacing, required to be uniform.
fn stride(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Ok(1.0);
    }
    let ds = times[1] - times[0];
    for k in 1..times.len() {
        if ((times[k] - times[k - 1]) - ds).abs() > 1e-9 * ds.max(1.0) {
            return Err(Error::InvalidInput("kernel phase needs a uniform snapshot stride".into()));
        }
    }
    if !(ds > 0.0) {
        return Err(Error::InvalidInput("snapshot times must increase".into()));
    }
    Ok(ds)
}

/// `delta` and `delta'` at every snapshot by space-time trapezoid sums of
/// the kernel formulas. The `delta' w` part of the source is closed by
/// Picard sweeps started from the previous step's rate.
pub fn phase_extract_kernel(
    model: &FluxViscositySystem,
    run: &SimulationRun,
    kernel: &KernelE,
    settings: &PhaseSettings,
) -> Result<PhaseSeries> {
    if kernel.n != run.n {
        return Err(Error::DimensionMismatch { expected: run.n, got: kernel.n });
    }
    let (n, len, h) = (run.n, run.len(), run.h);
    let ds = stride(&run.times)?;
    let kcount = run.times.len();
    let rem = RemainderData::new(model, &run.profile, h)?;
    let q: Vec<Vec<f64>> = run.w.iter().map(|w| rem.q(model, w)).collect::<Result<_>>()?;

    // rows[m] holds the kernel at lag m ds
    let mut rows: Vec<Option<(Vec<f64>, Vec<f64>)>> = vec![None; kcount];
    let mut delta = Vec::with_capacity(kcount);
    let mut rate = Vec::with_capacity(kcount);
    let mut iterations = Vec::with_capacity(kcount);
    let mut sources: Vec<Vec<f64>> = Vec::with_capacity(kcount);
    for k in 0..kcount {
        let t = run.times[k];
        let (lin_d, lin_r) = linear_terms(kernel, run, t);
        // lags with t - s_j >= 1
        let jmax = (0..k).rev().find(|&j| t - run.times[j] >= 1.0 - 1e-12);
        for j in 0..jmax.map_or(0, |j| j + 1) {
            let m = k - j;
            if rows[m].is_none() {
                rows[m] = Some(kernel_row(kernel, run.x0(), h, len, m as f64 * ds));
            }
        }
        let duhamel = |src: &[Vec<f64>], which: usize| -> f64 {
            let jm = match jmax {
                Some(jm) if jm > 0 => jm,
                _ => return 0.0,
            };
            let mut s = 0.0;
            for j in 0..=jm {
                let wt = if j == 0 || j == jm { 0.5 * ds } else { ds };
                let (ey, eyt) = rows[k - j].as_ref().expect("kernel row");
                s += wt * pair_integral(if which == 0 { ey } else { eyt }, &src[j], n, h);
            }
            s
        };
        // the current source enters only through lags below 1, so the
        // sweep settles once the lagged start has been replaced
        let mut guess = rate.last().copied().unwrap_or(0.0);
        let mut iters = 0;
        let value = loop {
            iters += 1;
            sources.truncate(k);
            sources.push(q[k].iter().zip(&run.w[k]).map(|(a, b)| a + guess * b).collect());
            let value = lin_r + duhamel(&sources, 1);
            if (value - guess).abs() <= settings.tol * value.abs().max(1.0) {
                break value;
            }
            if iters >= settings.max_iter {
                return Err(Error::FixedPoint(iters));
            }
            guess = value;
        };
        sources[k] = q[k].iter().zip(&run.w[k]).map(|(a, b)| a + value * b).collect();
        delta.push(lin_d + duhamel(&sources, 0));
        rate.push(value);
        iterations.push(iters);
    }
    let delta_lsq = run.delta_lsq.clone();
    let discrepancy: Vec<f64> = delta.iter().zip(&delta_lsq).map(|(a, b)| (a - b).abs()).collect();
    let delta_sup = delta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let deltadot_weighted_sup =
        rate.iter().zip(&run.times).fold(0.0f64, |m, (v, t)| m.max(v.abs() * (1.0 + t).sqrt()));
    let max_discrepancy = discrepancy.iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(PhaseSeries {
        times: run.times.clone(),
        delta_kernel: delta,
        deltadot_kernel: rate,
        delta_lsq,
        discrepancy,
        iterations,
        delta_sup,
        deltadot_weighted_sup,
        max_discrepancy,
    })
}
