//! IMEX stepper for the perturbation `w = W - W̄` of a standing profile.
//!
//! Convection: central fluxes of `F~(W) - F~(W̄)` with fourth-order
//! artificial dissipation, Heun in time. Diffusion: trapezoidal with the
//! coefficient `B~` frozen at the stage state and a block-tridiagonal solve.
//! Both parts are written in flux form so the discrete mass of `w` changes
//! only through the two boundary faces.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{real_eigen, solve_multi_in_place};
use crate::models::FluxViscositySystem;

/// How ghost values beyond `±X` are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Ghosts carry only the modes leaving the domain (`a < 0` on the left,
    /// `a > 0` on the right).
    Characteristic,
    /// Zero-gradient extrapolation.
    Extrapolate,
}

pub(crate) struct Scheme<'a> {
    model: &'a FluxViscositySystem,
    pub n: usize,
    pub len: usize,
    pub h: f64,
    pub dt: f64,
    kappa: f64,
    pub rho: f64,
    wbar: Vec<f64>,
    fbar: Vec<f64>,
    bbar_face: Vec<f64>,
    dwbar_face: Vec<f64>,
    pl: Vec<f64>,
    pr: Vec<f64>,
    // work buffers
    ext: Vec<f64>,
    fdiff: Vec<f64>,
    bc: Vec<f64>,
    u: Vec<f64>,
}

/// Accumulated boundary exchange of one step.
#[derive(Debug, Clone, Default)]
pub(crate) struct StepFlux {
    /// `dt * (net inflow)` per component.
    pub inflow: Vec<f64>,
}

fn mat_vec(m: &[f64], v: &[f64], out: &mut [f64], n: usize) {
    for i in 0..n {
        out[i] = (0..n).map(|j| m[i * n + j] * v[j]).sum();
    }
}

/// Projector onto the modes of `dF~(w_end)` selected by `keep`.
fn projector(model: &FluxViscositySystem, w_end: &[f64], keep: impl Fn(f64) -> bool) -> Result<Vec<f64>> {
    let n = model.n();
    let mut u = vec![0.0; n];
    model.u_from_w(w_end, &mut u)?;
    let a = model.dftilde_at_u(&DVector::from_vec(u));
    let eig = real_eigen(&a, 1e-9)?;
    let mut p = DMatrix::<f64>::zeros(n, n);
    for (k, &ak) in eig.values.iter().enumerate() {
        if keep(ak) {
            p += eig.right.column(k) * eig.left.row(k);
        }
    }
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = p[(i, j)];
        }
    }
    Ok(out)
}

/// Spectral radius of `dF~` at the state `w`.
pub(crate) fn spectral_radius(model: &FluxViscositySystem, w: &[f64]) -> Result<f64> {
    let n = model.n();
    let mut u = vec![0.0; n];
    model.u_from_w(w, &mut u)?;
    let a = model.dftilde_at_u(&DVector::from_vec(u));
    Ok(a.complex_eigenvalues().iter().fold(0.0, |m, z| m.max(z.norm())))
}

impl<'a> Scheme<'a> {
    pub fn new(
        model: &'a FluxViscositySystem,
        wbar: Vec<f64>,
        h: f64,
        dt: f64,
        rho: f64,
        kappa: f64,
        boundary: Boundary,
    ) -> Result<Scheme<'a>> {
        let n = model.n();
        let len = wbar.len() / n;
        if len < 8 {
            return Err(Error::InvalidInput("simulation grid needs at least 8 nodes".into()));
        }
        let mut s = Scheme {
            model,
            n,
            len,
            h,
            dt,
            kappa,
            rho,
            fbar: vec![0.0; len * n],
            bbar_face: vec![0.0; (len + 1) * n * n],
            dwbar_face: vec![0.0; (len + 1) * n],
            pl: vec![0.0; n * n],
            pr: vec![0.0; n * n],
            ext: vec![0.0; (len + 4) * n],
            fdiff: vec![0.0; (len + 4) * n],
            bc: vec![0.0; (len + 1) * n * n],
            u: vec![0.0; n],
            wbar,
        };
        for i in 0..len {
            let wi = s.wbar[i * n..(i + 1) * n].to_vec();
            s.flux(&wi, i)?;
        }
        let wb = s.wbar.clone();
        let mut bb = vec![0.0; (len + 1) * n * n];
        s.face_coefficients(&wb, &mut bb)?;
        s.bbar_face = bb;
        for f in 1..len {
            for c in 0..n {
                s.dwbar_face[f * n + c] = (wb[f * n + c] - wb[(f - 1) * n + c]) / h;
            }
        }
        match boundary {
            Boundary::Characteristic => {
                s.pl = projector(model, &wb[..n], |a| a < 0.0)?;
                s.pr = projector(model, &wb[(len - 1) * n..], |a| a > 0.0)?;
            }
            Boundary::Extrapolate => {
                for c in 0..n {
                    s.pl[c * n + c] = 1.0;
                    s.pr[c * n + c] = 1.0;
                }
            }
        }
        Ok(s)
    }

    fn flux(&mut self, w: &[f64], i: usize) -> Result<()> {
        let n = self.n;
        self.model.u_from_w(w, &mut self.u)?;
        self.model.f1_into(&self.u, &mut self.fbar[i * n..(i + 1) * n]);
        Ok(())
    }

    fn btilde(&self, w: &[f64], u: &mut [f64], out: &mut [f64]) -> Result<()> {
        self.model.u_from_w(w, u)?;
        if self.model.f0_is_identity() {
            self.model.visc_into(u, out);
        } else {
            let b = self.model.btilde_at_u(&DVector::from_column_slice(u));
            let n = self.n;
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] = b[(i, j)];
                }
            }
        }
        Ok(())
    }

    /// `B~` at face averages of the full state `wfull`; the end faces use
    /// the boundary node.
    fn face_coefficients(&self, wfull: &[f64], out: &mut [f64]) -> Result<()> {
        let (n, len) = (self.n, self.len);
        let nn = n * n;
        let mut avg = vec![0.0; n];
        let mut u = vec![0.0; n];
        for f in 0..=len {
            let (a, b) = (f.saturating_sub(1).min(len - 1), f.min(len - 1));
            for c in 0..n {
                avg[c] = 0.5 * (wfull[a * n + c] + wfull[b * n + c]);
            }
            self.btilde(&avg, &mut u, &mut out[f * nn..(f + 1) * nn])?;
        }
        Ok(())
    }

    pub fn full_state(&self, w: &[f64]) -> Vec<f64> {
        w.iter().zip(&self.wbar).map(|(a, b)| a + b).collect()
    }

    fn fill_ext(&mut self, w: &[f64]) {
        let (n, len) = (self.n, self.len);
        self.ext[2 * n..(len + 2) * n].copy_from_slice(w);
        let mut g = vec![0.0; n];
        mat_vec(&self.pl, &w[..n], &mut g, n);
        self.ext[..n].copy_from_slice(&g);
        self.ext[n..2 * n].copy_from_slice(&g);
        mat_vec(&self.pr, &w[(len - 1) * n..], &mut g, n);
        self.ext[(len + 2) * n..(len + 3) * n].copy_from_slice(&g);
        self.ext[(len + 3) * n..].copy_from_slice(&g);
    }

    /// Convective tendency `C(w)` into `out`; returns the net inflow
    /// `F^_0 - F^_len` through the boundary faces.
    pub fn convection(&mut self, w: &[f64], out: &mut [f64]) -> Result<Vec<f64>> {
        let (n, len, h) = (self.n, self.len, self.h);
        self.fill_ext(w);
        let mut wf = vec![0.0; n];
        let mut fl = vec![0.0; n];
        for e in 0..len + 4 {
            let node = e.saturating_sub(2).min(len - 1);
            for c in 0..n {
                wf[c] = self.wbar[node * n + c] + self.ext[e * n + c];
            }
            self.model.u_from_w(&wf, &mut self.u)?;
            self.model.f1_into(&self.u, &mut fl);
            for c in 0..n {
                self.fdiff[e * n + c] = fl[c] - self.fbar[node * n + c];
            }
        }
        let kr = self.kappa * self.rho;
        let face = |s: &Self, f: usize, c: usize| {
            let x = |k: usize| s.ext[k * n + c];
            0.5 * (s.fdiff[(f + 1) * n + c] + s.fdiff[(f + 2) * n + c])
                + kr * (x(f + 3) - 3.0 * x(f + 2) + 3.0 * x(f + 1) - x(f))
        };
        let mut prev: Vec<f64> = (0..n).map(|c| face(self, 0, c)).collect();
        let first = prev.clone();
        for i in 0..len {
            for c in 0..n {
                let next = face(self, i + 1, c);
                out[i * n + c] = -(next - prev[c]) / h;
                prev[c] = next;
            }
        }
        Ok((0..n).map(|c| first[c] - prev[c]).collect())
    }

    /// Freezes the diffusion coefficient at the perturbation `wc`.
    pub fn freeze(&mut self, wc: &[f64]) -> Result<()> {
        let full = self.full_state(wc);
        let mut bc = std::mem::take(&mut self.bc);
        let r = self.face_coefficients(&full, &mut bc);
        self.bc = bc;
        r
    }

    /// `out += scale * L w` for the frozen linear diffusion operator;
    /// returns `scale` times the net boundary inflow.
    pub fn add_diffusion(&self, w: &[f64], scale: f64, out: &mut [f64]) -> Vec<f64> {
        let (n, len, h) = (self.n, self.len, self.h);
        let nn = n * n;
        let mut gl = vec![0.0; n];
        let mut gr = vec![0.0; n];
        mat_vec(&self.pl, &w[..n], &mut gl, n);
        mat_vec(&self.pr, &w[(len - 1) * n..], &mut gr, n);
        let mut dw = vec![0.0; n];
        let mut flux_prev = vec![0.0; n];
        let mut flux = vec![0.0; n];
        let mut inflow = vec![0.0; n];
        for f in 0..=len {
            for c in 0..n {
                let left = if f == 0 { gl[c] } else { w[(f - 1) * n + c] };
                let right = if f == len { gr[c] } else { w[f * n + c] };
                dw[c] = (right - left) / h;
            }
            mat_vec(&self.bc[f * nn..(f + 1) * nn], &dw, &mut flux, n);
            if f == 0 {
                for c in 0..n {
                    inflow[c] -= scale * flux[c];
                }
            } else {
                for c in 0..n {
                    out[(f - 1) * n + c] += scale * (flux[c] - flux_prev[c]) / h;
                }
            }
            if f == len {
                for c in 0..n {
                    inflow[c] += scale * flux[c];
                }
            }
            std::mem::swap(&mut flux, &mut flux_prev);
        }
        inflow
    }

    /// `out += scale * E` with `E` the divergence of
    /// `(B~(W_c) - B~(W̄)) W̄_x` at interior faces (the end faces carry no
    /// profile gradient).
    pub fn add_source(&self, scale: f64, out: &mut [f64]) {
        let (n, len, h) = (self.n, self.len, self.h);
        let nn = n * n;
        let mut prev = vec![0.0; n];
        let mut cur = vec![0.0; n];
        for f in 1..=len {
            for c in 0..n {
                cur[c] = if f < len {
                    (0..n)
                        .map(|k| (self.bc[f * nn + c * n + k] - self.bbar_face[f * nn + c * n + k]) * self.dwbar_face[f * n + k])
                        .sum()
                } else {
                    0.0
                };
                out[(f - 1) * n + c] += scale * (cur[c] - prev[c]) / h;
            }
            std::mem::swap(&mut cur, &mut prev);
        }
    }

    /// Solves `(I - dt/2 L) x = rhs` in place with the frozen coefficient.
    pub fn solve_implicit(&mut self, rhs: &mut [f64]) -> Result<()> {
        let (n, len) = (self.n, self.len);
        let nn = n * n;
        let c = self.dt / (2.0 * self.h * self.h);
        let bc = &self.bc;
        if n == 1 {
            // scalar Thomas
            let mut cp = vec![0.0; len];
            let diag = |i: usize| {
                let mut d = 1.0 + c * (bc[i] + bc[i + 1]);
                if i == 0 {
                    d -= c * bc[0] * self.pl[0];
                }
                if i == len - 1 {
                    d -= c * bc[len] * self.pr[0];
                }
                d
            };
            let mut m = diag(0);
            cp[0] = -c * bc[1] / m;
            rhs[0] /= m;
            for i in 1..len {
                let lo = -c * bc[i];
                m = diag(i) - lo * cp[i - 1];
                cp[i] = -c * bc[i + 1] / m;
                rhs[i] = (rhs[i] - lo * rhs[i - 1]) / m;
            }
            for i in (0..len - 1).rev() {
                rhs[i] -= cp[i] * rhs[i + 1];
            }
            return Ok(());
        }
        // block Thomas: cp_i = M_i^{-1} U_i, d_i = M_i^{-1}(r_i - L_i d_{i-1})
        let mut cp = vec![0.0; len * nn];
        let mut a = vec![0.0; nn];
        let mut b = vec![0.0; n * (n + 1)];
        for i in 0..len {
            for p in 0..n {
                for q in 0..n {
                    let id = if p == q { 1.0 } else { 0.0 };
                    let mut d = id + c * (bc[i * nn + p * n + q] + bc[(i + 1) * nn + p * n + q]);
                    if i == 0 {
                        d -= c * (0..n).map(|k| bc[p * n + k] * self.pl[k * n + q]).sum::<f64>();
                    }
                    if i == len - 1 {
                        d -= c * (0..n).map(|k| bc[len * nn + p * n + k] * self.pr[k * n + q]).sum::<f64>();
                    }
                    if i > 0 {
                        // M = D - L cp_{i-1}, L = -c B_i
                        d += c * (0..n).map(|k| bc[i * nn + p * n + k] * cp[(i - 1) * nn + k * n + q]).sum::<f64>();
                    }
                    a[p * n + q] = d;
                }
                let mut r = rhs[i * n + p];
                if i > 0 {
                    r += c * (0..n).map(|k| bc[i * nn + p * n + k] * rhs[(i - 1) * n + k]).sum::<f64>();
                }
                for q in 0..n {
                    b[p * (n + 1) + q] = if i + 1 < len { -c * bc[(i + 1) * nn + p * n + q] } else { 0.0 };
                }
                b[p * (n + 1) + n] = r;
            }
            if !solve_multi_in_place(&mut a, &mut b, n, n + 1) {
                return Err(Error::BlowUp { t: f64::NAN, reason: "singular implicit block".into() });
            }
            for p in 0..n {
                for q in 0..n {
                    cp[i * nn + p * n + q] = b[p * (n + 1) + q];
                }
                rhs[i * n + p] = b[p * (n + 1) + n];
            }
        }
        let mut tmp = vec![0.0; n];
        for i in (0..len - 1).rev() {
            for p in 0..n {
                tmp[p] = (0..n).map(|k| cp[i * nn + p * n + k] * rhs[(i + 1) * n + k]).sum();
            }
            for p in 0..n {
                rhs[i * n + p] -= tmp[p];
            }
        }
        Ok(())
    }

    /// One IMEX trapezoid step `w <- w(t + dt)`; returns the boundary inflow
    /// integrated over the step.
    pub fn step(&mut self, w: &mut [f64]) -> Result<StepFlux> {
        let (dt, n) = (self.dt, self.n);
        let size = w.len();
        let mut cn = vec![0.0; size];
        let in_cn = self.convection(w, &mut cn)?;
        // predictor
        self.freeze(w)?;
        let mut star: Vec<f64> = w.iter().zip(&cn).map(|(a, b)| a + dt * b).collect();
        self.add_source(dt, &mut star);
        self.add_diffusion(w, 0.5 * dt, &mut star);
        self.solve_implicit(&mut star)?;
        // corrector with the coefficient at the stage midpoint
        let mut cs = vec![0.0; size];
        let in_cs = self.convection(&star, &mut cs)?;
        let mid: Vec<f64> = w.iter().zip(&star).map(|(a, b)| 0.5 * (a + b)).collect();
        self.freeze(&mid)?;
        let mut next: Vec<f64> = (0..size).map(|k| w[k] + 0.5 * dt * (cn[k] + cs[k])).collect();
        self.add_source(dt, &mut next);
        let in_dn = self.add_diffusion(w, 0.5 * dt, &mut next);
        self.solve_implicit(&mut next)?;
        let mut scratch = vec![0.0; size];
        let in_dnext = self.add_diffusion(&next, 0.5 * dt, &mut scratch);
        w.copy_from_slice(&next);
        let inflow = (0..n).map(|c| 0.5 * dt * (in_cn[c] + in_cs[c]) + in_dn[c] + in_dnext[c]).collect();
        Ok(StepFlux { inflow })
    }
}
