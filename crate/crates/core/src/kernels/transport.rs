//! Hyperbolic transport data: the reduced convection matrix `A_*`, its
//! eigenmodes with dynamical normalization, the dissipation matrix `D_*`
//! and the damping factors along characteristics.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{derivative, real_eigen};
use crate::models::FluxViscositySystem;
use crate::profile::ShockProfile;
use crate::spectral::{Blocks, LinearizedCoefficients};

/// Transport data on the profile grid; empty when there is no hyperbolic
/// block.
#[derive(Debug, Clone, Serialize)]
pub struct HyperbolicTransportData {
    /// Size `n - r` of the hyperbolic block.
    pub nh: usize,
    pub h: f64,
    pub x: Vec<f64>,
    /// `A_*` row-major per grid point.
    pub a_star: Vec<f64>,
    /// Eigenvalues `a_j^*(x)`, `[i * nh + j]`, ascending.
    pub speeds: Vec<f64>,
    /// `L_j^*` rows, `[i * nh * nh + j * nh + c]`.
    pub left: Vec<f64>,
    /// `R_j^*` columns, `[i * nh * nh + j * nh + c]`.
    pub right: Vec<f64>,
    /// `D_*` row-major per grid point.
    pub d_star: Vec<f64>,
    /// Scalar rates `L_j^* D_* R_j^*`, `[i * nh + j]`.
    pub rates: Vec<f64>,
    /// Endstate speeds and rates for `z` outside the grid.
    pub speeds_minus: Vec<f64>,
    pub speeds_plus: Vec<f64>,
    pub rates_minus: Vec<f64>,
    pub rates_plus: Vec<f64>,
    /// `max |L_j R_k - delta_jk|`.
    pub static_error: f64,
    /// `max |L_j dR_j/dx|` by finite differences.
    pub dynamic_error: f64,
}

/// `A_*`, `D_*` at one point from the blocks and `d/dx (b2^{-1} b1)`.
fn reduced(bl: &Blocks, dk: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let b2i = bl.b2.clone().try_inverse().ok_or_else(|| Error::SpectralDegeneracy("b2 is singular".into()))?;
    let k = &b2i * &bl.b1;
    let a_star = &bl.a11 - &bl.a12 * &k;
    let inner = &bl.a21 - &bl.a22 * &k + &k * &a_star + &bl.b2 * dk;
    let d_star = &bl.a12 * &b2i * inner;
    Ok((a_star, d_star))
}

fn flatten(m: &DMatrix<f64>, out: &mut Vec<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
}

/// Computes `A_*`, its eigenmodes, `D_*` and the rates on the profile grid.
pub fn hyperbolic_transport_data(model: &FluxViscositySystem, profile: &ShockProfile) -> Result<HyperbolicTransportData> {
    let c = LinearizedCoefficients::new(model, profile)?;
    let nh = c.nh;
    let len = c.len();
    let mut data = HyperbolicTransportData {
        nh,
        h: c.h,
        x: c.x.clone(),
        a_star: vec![],
        speeds: vec![],
        left: vec![],
        right: vec![],
        d_star: vec![],
        rates: vec![],
        speeds_minus: vec![],
        speeds_plus: vec![],
        rates_minus: vec![],
        rates_plus: vec![],
        static_error: 0.0,
        dynamic_error: 0.0,
    };
    if nh == 0 {
        return Ok(data);
    }
    let r = c.r;
    let blocks: Vec<Blocks> = (0..len).map(|i| Blocks::split(&c.a_at(i), &c.b_at(i), nh)).collect();
    // K = b2^{-1} b1 and its derivative
    let mut kflat = Vec::with_capacity(len * r * nh);
    for bl in &blocks {
        let b2i = bl.b2.clone().try_inverse().ok_or_else(|| Error::SpectralDegeneracy("b2 is singular".into()))?;
        flatten(&(b2i * &bl.b1), &mut kflat);
    }
    let mut dk = vec![0.0; kflat.len()];
    for e in 0..r * nh {
        let s: Vec<f64> = (0..len).map(|i| kflat[i * r * nh + e]).collect();
        let d = derivative(&s, c.h);
        for i in 0..len {
            dk[i * r * nh + e] = d[i];
        }
    }
    let mut prev_r: Option<DMatrix<f64>> = None;
    let mut rights: Vec<DMatrix<f64>> = Vec::with_capacity(len);
    let mut lefts: Vec<DMatrix<f64>> = Vec::with_capacity(len);
    let mut dstars: Vec<DMatrix<f64>> = Vec::with_capacity(len);
    for (i, bl) in blocks.iter().enumerate() {
        let dki = DMatrix::from_row_slice(r, nh, &dk[i * r * nh..(i + 1) * r * nh]);
        let (a_star, d_star) = reduced(bl, &dki)?;
        let eig = real_eigen(&a_star, 1e-10)?;
        let scale = a_star.norm().max(1.0);
        if eig.values.windows(2).any(|w| (w[1] - w[0]).abs() <= 1e-8 * scale) {
            return Err(Error::SpectralDegeneracy(format!("eigenvalues of A_* collide at x = {:.4}", c.x[i])));
        }
        let mut right = eig.right.clone();
        if let Some(p) = &prev_r {
            for j in 0..nh {
                if p.column(j).dot(&right.column(j)) < 0.0 {
                    let col = -right.column(j);
                    right.set_column(j, &col);
                }
            }
        }
        let left = right.clone().try_inverse().ok_or_else(|| Error::SpectralDegeneracy("A_* is defective".into()))?;
        flatten(&a_star, &mut data.a_star);
        data.speeds.extend_from_slice(&eig.values);
        prev_r = Some(right.clone());
        rights.push(right);
        lefts.push(left);
        dstars.push(d_star);
    }
    // dynamical normalization R_j = c_j r_j, c_j = exp(-int l_j r_j'), pinned at x = 0
    let center = (len - 1) / 2;
    let mut scale = vec![vec![1.0; len]; nh];
    for j in 0..nh {
        let mut dr = vec![vec![0.0; len]; nh];
        for comp in 0..nh {
            let s: Vec<f64> = (0..len).map(|i| rights[i][(comp, j)]).collect();
            dr[comp] = derivative(&s, c.h);
        }
        let g: Vec<f64> = (0..len).map(|i| (0..nh).map(|comp| lefts[i][(j, comp)] * dr[comp][i]).sum()).collect();
        let mut cum = vec![0.0; len];
        for i in center + 1..len {
            cum[i] = cum[i - 1] + 0.5 * c.h * (g[i - 1] + g[i]);
        }
        for i in (0..center).rev() {
            cum[i] = cum[i + 1] - 0.5 * c.h * (g[i] + g[i + 1]);
        }
        for i in 0..len {
            scale[j][i] = (-cum[i]).exp();
        }
    }
    let mut static_error = 0.0f64;
    for i in 0..len {
        let mut rr = rights[i].clone();
        let mut ll = lefts[i].clone();
        for j in 0..nh {
            let cj = scale[j][i];
            let col = rr.column(j) * cj;
            rr.set_column(j, &col);
            let row = ll.row(j) / cj;
            ll.set_row(j, &row);
        }
        static_error = static_error.max((&ll * &rr - DMatrix::<f64>::identity(nh, nh)).amax());
        for j in 0..nh {
            for comp in 0..nh {
                data.left.push(ll[(j, comp)]);
            }
            for comp in 0..nh {
                data.right.push(rr[(comp, j)]);
            }
            data.rates.push((ll.row(j) * &dstars[i] * rr.column(j))[(0, 0)]);
        }
        flatten(&dstars[i], &mut data.d_star);
    }
    // dynamical normalization residual
    let mut dynamic_error = 0.0f64;
    for j in 0..nh {
        let mut dr = vec![vec![0.0; len]; nh];
        for comp in 0..nh {
            let s: Vec<f64> = (0..len).map(|i| data.right[i * nh * nh + j * nh + comp]).collect();
            dr[comp] = derivative(&s, c.h);
        }
        for i in 3..len - 3 {
            let v: f64 = (0..nh).map(|comp| data.left[i * nh * nh + j * nh + comp] * dr[comp][i]).sum();
            dynamic_error = dynamic_error.max(v.abs());
        }
    }
    data.static_error = static_error;
    data.dynamic_error = dynamic_error;
    // endstate values
    let zero = DMatrix::zeros(r, nh);
    for (a, b, speeds, rates) in [
        (&c.a_minus, &c.b_minus, &mut data.speeds_minus, &mut data.rates_minus),
        (&c.a_plus, &c.b_plus, &mut data.speeds_plus, &mut data.rates_plus),
    ] {
        let bl = Blocks::split(a, b, nh);
        let (a_star, d_star) = reduced(&bl, &zero)?;
        let eig = real_eigen(&a_star, 1e-10)?;
        *speeds = eig.values.clone();
        *rates = (0..nh).map(|j| (eig.left.row(j) * &d_star * eig.right.column(j))[(0, 0)]).collect();
    }
    Ok(data)
}

impl HyperbolicTransportData {
    pub fn is_empty(&self) -> bool {
        self.nh == 0
    }

    /// Linear interpolation of a per-point scalar family at `z`, with
    /// endstate values outside the grid.
    fn interp(&self, values: &[f64], minus: &[f64], plus: &[f64], j: usize, z: f64) -> f64 {
        let len = self.x.len();
        let x0 = self.x[0];
        if z <= x0 {
            return minus[j];
        }
        if z >= self.x[len - 1] {
            return plus[j];
        }
        let s = (z - x0) / self.h;
        let k = (s.floor() as usize).min(len - 2);
        let u = s - k as f64;
        (1.0 - u) * values[k * self.nh + j] + u * values[(k + 1) * self.nh + j]
    }

    pub fn speed(&self, j: usize, z: f64) -> f64 {
        self.interp(&self.speeds, &self.speeds_minus, &self.speeds_plus, j, z)
    }

    pub fn rate(&self, j: usize, z: f64) -> f64 {
        self.interp(&self.rates, &self.rates_minus, &self.rates_plus, j, z)
    }

    /// Follows the backward characteristic `dz/dtau = a_j(z)`, `z(t) = x`,
    /// down to `tau = 0`; returns `(z(0), zeta_j(x, t))` with
    /// `zeta = exp(-int_0^t L D R (z(tau)) dtau)`.
    pub fn zeta(&self, j: usize, x: f64, t: f64) -> Result<(f64, f64)> {
        if j >= self.nh {
            return Err(Error::InvalidInput(format!("mode {j} out of range")));
        }
        if t == 0.0 {
            return Ok((x, 1.0));
        }
        let amax = self.speeds.iter().chain(&self.speeds_minus).chain(&self.speeds_plus).fold(0.0f64, |m, v| m.max(v.abs()));
        let dt_max = (2.0 * self.h / amax.max(1e-12)).min(0.1);
        let steps = (t / dt_max).ceil().max(1.0) as usize;
        let dt = -t / steps as f64;
        let (mut z, mut integral) = (x, 0.0);
        let f = |z: f64| (self.speed(j, z), self.rate(j, z));
        for _ in 0..steps {
            let (a1, q1) = f(z);
            let (a2, q2) = f(z + 0.5 * dt * a1);
            let (a3, q3) = f(z + 0.5 * dt * a2);
            let (a4, q4) = f(z + dt * a3);
            z += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            integral -= dt / 6.0 * (q1 + 2.0 * q2 + 2.0 * q3 + q4);
        }
        Ok((z, (-integral).exp()))
    }

    /// `zeta_j(x, t)` on a table of stations and times, `[ix][it]`.
    pub fn zeta_table(&self, j: usize, xs: &[f64], ts: &[f64]) -> Result<Vec<Vec<f64>>> {
        xs.iter().map(|&x| ts.iter().map(|&t| self.zeta(j, x, t).map(|v| v.1)).collect()).collect()
    }
}
