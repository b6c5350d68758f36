//! Standing viscous shock profiles `B(U) U' = F1(U) - F1(U-)` by shooting
//! along a one-dimensional invariant manifold of an endstate.

mod characteristics;

use std::cell::RefCell;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{derivative, fd_jacobian, lagrange6, solve_in_place, D1_6};
use crate::models::{check_assumptions, FluxViscositySystem};
use crate::ode::Dopri5;

pub use characteristics::{
    characteristic_data, classify_shock, endstate_characteristics, CharacteristicData, EndstateCharacteristics,
    HalfLineField, ShockType,
};

/// Solver settings.
#[derive(Debug, Clone, Copy)]
pub struct ProfileSettings {
    /// Half-width `X` of the grid `[-X, X]`.
    pub halfwidth: f64,
    /// Mesh size.
    pub h: f64,
    /// Bound on the traveling-wave residual at interior grid points.
    pub tol_profile: f64,
    /// Bound on `|U(+-X) - U+-|`.
    pub tol_endstate: f64,
    /// Double `X` until the endstate tolerance holds.
    pub adaptive: bool,
    /// Largest half-width tried by the adaptive loop.
    pub max_halfwidth: f64,
}

impl Default for ProfileSettings {
    fn default() -> Self {
        ProfileSettings {
            halfwidth: 20.0,
            h: 0.01,
            tol_profile: 1e-8,
            tol_endstate: 1e-6,
            adaptive: true,
            max_halfwidth: 2000.0,
        }
    }
}

/// Which component pins the translation and the value it takes at `x = 0`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShiftConvention {
    pub component: usize,
    pub value: f64,
}

/// A standing shock profile sampled on `x_i = -X + i h`.
#[derive(Debug, Clone)]
pub struct ShockProfile {
    pub n: usize,
    pub h: f64,
    pub halfwidth: f64,
    pub x: Vec<f64>,
    /// `U(x_i)`, row-major `[i * n + k]`.
    pub u: Vec<f64>,
    /// `U'(x_i)` from the traveling-wave equation.
    pub du: Vec<f64>,
    /// `W = F0(U)` on the grid.
    pub w: Vec<f64>,
    /// `W' = dF0(U) U'` on the grid.
    pub dw: Vec<f64>,
    pub u_minus: DVector<f64>,
    pub u_plus: DVector<f64>,
    /// Largest traveling-wave residual at interior points, measured with a
    /// sixth-order finite difference of the samples.
    pub residual: f64,
    pub endstate_error: f64,
    pub shift: ShiftConvention,
}

impl ShockProfile {
    pub fn len(&self) -> usize {
        self.x.len()
    }
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
    /// Index of `x = 0`.
    pub fn center_index(&self) -> usize {
        (self.x.len() - 1) / 2
    }
    pub fn u_at(&self, i: usize) -> &[f64] {
        &self.u[i * self.n..(i + 1) * self.n]
    }
    pub fn du_at(&self, i: usize) -> &[f64] {
        &self.du[i * self.n..(i + 1) * self.n]
    }
    pub fn w_at(&self, i: usize) -> &[f64] {
        &self.w[i * self.n..(i + 1) * self.n]
    }
    pub fn dw_at(&self, i: usize) -> &[f64] {
        &self.dw[i * self.n..(i + 1) * self.n]
    }
    /// Slowest exponential decay rate of `|U'|` over the two tails, by a
    /// log-linear least-squares fit where `|U'|` lies between `1e-10` and
    /// `1e-3` of its maximum.
    pub fn tail_rate(&self) -> f64 {
        let norms: Vec<f64> = (0..self.len()).map(|i| self.du_at(i).iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
        let peak = norms.iter().cloned().fold(0.0, f64::max);
        let c = self.center_index();
        let fit = |idx: &mut dyn Iterator<Item = usize>| -> Option<f64> {
            let pts: Vec<(f64, f64)> = idx
                .filter(|&i| norms[i] < 1e-3 * peak && norms[i] > 1e-10 * peak)
                .map(|i| (self.x[i].abs(), norms[i].ln()))
                .collect();
            if pts.len() < 4 {
                return None;
            }
            let m = pts.len() as f64;
            let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
            let (mx, my) = (sx / m, sy / m);
            let (num, den) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2)));
            Some(-num / den)
        };
        let left = fit(&mut (0..c));
        let right = fit(&mut (c..self.len()));
        match (left, right) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => f64::NAN,
        }
    }
    /// Component `k` of `U` on the grid.
    pub fn component(&self, k: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.u[i * self.n + k]).collect()
    }
    /// Component `k` of `W` on the grid.
    pub fn w_component(&self, k: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.w[i * self.n + k]).collect()
    }
    /// Interpolated `W` at an arbitrary `x` (endstate values outside the grid).
    pub fn w_interp(&self, x: f64, out: &mut [f64]) {
        let x0 = self.x[0];
        let xn = self.x[self.len() - 1];
        for k in 0..self.n {
            out[k] = if x < x0 || x > xn {
                let end = if x < x0 { self.w_at(0)[k] } else { self.w_at(self.len() - 1)[k] };
                end
            } else {
                lagrange6(&self.w_component(k), x0, self.h, x)
            };
        }
    }

    /// The samples shifted by `k` grid cells (`U(x - k h)`), with endstate
    /// values filling the vacated cells. Derived fields are recomputed.
    pub fn shifted(&self, model: &FluxViscositySystem, k: isize) -> Result<ShockProfile> {
        let n = self.n;
        let len = self.len() as isize;
        let mut u = vec![0.0; self.u.len()];
        for i in 0..len {
            let j = i - k;
            let src: &[f64] = if j < 0 {
                self.u_minus.as_slice()
            } else if j >= len {
                self.u_plus.as_slice()
            } else {
                self.u_at(j as usize)
            };
            u[i as usize * n..(i as usize + 1) * n].copy_from_slice(src);
        }
        let mut p = self.clone();
        p.u = u;
        p.refresh(model)?;
        Ok(p)
    }

    /// Re-imposes the shift convention on (possibly translated) samples: the
    /// pin crossing is located by interpolation and the orbit is re-integrated
    /// from there on the same grid.
    pub fn repin(&self, model: &FluxViscositySystem) -> Result<ShockProfile> {
        let comp = self.component(self.shift.component);
        let target = self.shift.value;
        let x0 = self.x[0];
        let mut idx = None;
        for i in 0..self.len() - 1 {
            if (comp[i] - target) * (comp[i + 1] - target) <= 0.0 && comp[i] != comp[i + 1] {
                idx = Some(i);
                break;
            }
        }
        let i = idx.ok_or_else(|| Error::NoConnection("pin value is never crossed".into()))?;
        let (mut a, mut b) = (self.x[i], self.x[i + 1]);
        let fa = lagrange6(&comp, x0, self.h, a) - target;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            let fm = lagrange6(&comp, x0, self.h, m) - target;
            if fm == 0.0 || (b - a) < 1e-15 {
                a = m;
                b = m;
                break;
            }
            if (fm > 0.0) == (fa > 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        let xc = 0.5 * (a + b);
        let state: Vec<f64> = (0..self.n).map(|k| lagrange6(&self.component(k), x0, self.h, xc)).collect();
        let red = Reduced::new(model, &self.u_minus, &self.u_plus)?;
        let pin = red.split(&state).1;
        build_profile(&red, &pin, self.halfwidth, self.h, self.shift)
    }

    fn refresh(&mut self, model: &FluxViscositySystem) -> Result<()> {
        let red = Reduced::new(model, &self.u_minus, &self.u_plus)?;
        let n = self.n;
        for i in 0..self.len() {
            let ui = self.u_at(i).to_vec();
            let du = red.full_derivative(&ui)?;
            self.du[i * n..(i + 1) * n].copy_from_slice(&du);
        }
        fill_w(model, self);
        self.residual = residual(&red, self);
        self.endstate_error = endstate_error(self);
        Ok(())
    }
}

/// The traveling-wave ODE reduced to the parabolic variables.
struct Reduced<'a> {
    model: &'a FluxViscositySystem,
    n: usize,
    nh: usize,
    r: usize,
    f1_minus: Vec<f64>,
    u_minus: DVector<f64>,
    u_plus: DVector<f64>,
    guess: RefCell<Vec<f64>>,
}

impl<'a> Reduced<'a> {
    fn new(model: &'a FluxViscositySystem, um: &DVector<f64>, up: &DVector<f64>) -> Result<Self> {
        let n = model.n();
        let mut f1m = vec![0.0; n];
        model.f1_into(um.as_slice(), &mut f1m);
        Ok(Reduced {
            model,
            n,
            nh: model.hyperbolic_dim(),
            r: model.r(),
            f1_minus: f1m,
            u_minus: um.clone(),
            u_plus: up.clone(),
            guess: RefCell::new(um.as_slice()[..model.hyperbolic_dim()].to_vec()),
        })
    }

    fn split(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (u[..self.nh].to_vec(), u[self.nh..].to_vec())
    }

    /// Solves the algebraic rows `F1_I(U_I, U_II) = F1_I(U-)` for `U_I`.
    fn eliminate(&self, u2: &[f64]) -> Result<Vec<f64>> {
        let (n, nh) = (self.n, self.nh);
        let mut u = vec![0.0; n];
        u[nh..].copy_from_slice(u2);
        if nh == 0 {
            return Ok(u);
        }
        let mut guess = self.guess.borrow_mut();
        u[..nh].copy_from_slice(&guess);
        let mut f = vec![0.0; n];
        let mut jac = vec![0.0; n * n];
        for _ in 0..50 {
            self.model.f1_into(&u, &mut f);
            let mut res: Vec<f64> = (0..nh).map(|i| self.f1_minus[i] - f[i]).collect();
            let nrm = res.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if nrm <= 1e-15 * (1.0 + self.f1_minus[..nh].iter().map(|v| v.abs()).fold(0.0, f64::max)) {
                guess.copy_from_slice(&u[..nh]);
                return Ok(u);
            }
            self.model.df1_into(&u, &mut jac);
            let mut j11 = vec![0.0; nh * nh];
            for i in 0..nh {
                for k in 0..nh {
                    j11[i * nh + k] = jac[i * n + k];
                }
            }
            if !solve_in_place(&mut j11, &mut res, nh) {
                return Err(Error::NoConnection("algebraic constraint is singular".into()));
            }
            for i in 0..nh {
                u[i] += res[i];
            }
            if !self.model.is_admissible(&u) {
                return Err(Error::NoConnection("orbit left the admissible set".into()));
            }
        }
        self.model.f1_into(&u, &mut f);
        let nrm = (0..nh).map(|i| (self.f1_minus[i] - f[i]).abs()).fold(0.0, f64::max);
        if nrm < 1e-11 {
            guess.copy_from_slice(&u[..nh]);
            return Ok(u);
        }
        Err(Error::NoConnection("elimination of the hyperbolic variables failed".into()))
    }

    /// `U_II' = b(U)^{-1} (F1_II(U) - F1_II(U-))`.
    fn rhs(&self, u2: &[f64], out: &mut [f64]) -> Result<()> {
        let u = self.eliminate(u2)?;
        self.rhs_full(&u, out);
        Ok(())
    }

    fn rhs_full(&self, u: &[f64], out: &mut [f64]) {
        let (n, nh, r) = (self.n, self.nh, self.r);
        let mut f = vec![0.0; n];
        self.model.f1_into(u, &mut f);
        let mut b = vec![0.0; n * n];
        self.model.visc_into(u, &mut b);
        let mut bb = vec![0.0; r * r];
        for i in 0..r {
            for k in 0..r {
                bb[i * r + k] = b[(nh + i) * n + nh + k];
            }
        }
        for i in 0..r {
            out[i] = f[nh + i] - self.f1_minus[nh + i];
        }
        solve_in_place(&mut bb, out, r);
    }

    /// Full `U'` at a point of the orbit.
    fn full_derivative(&self, u: &[f64]) -> Result<Vec<f64>> {
        let (n, nh, r) = (self.n, self.nh, self.r);
        let mut d2 = vec![0.0; r];
        self.rhs_full(u, &mut d2);
        let mut du = vec![0.0; n];
        du[nh..].copy_from_slice(&d2);
        if nh > 0 {
            let mut jac = vec![0.0; n * n];
            self.model.df1_into(u, &mut jac);
            let mut j11 = vec![0.0; nh * nh];
            let mut rhs = vec![0.0; nh];
            for i in 0..nh {
                for k in 0..nh {
                    j11[i * nh + k] = jac[i * n + k];
                }
                rhs[i] = -(0..r).map(|k| jac[i * n + nh + k] * d2[k]).sum::<f64>();
            }
            if !solve_in_place(&mut j11, &mut rhs, nh) {
                return Err(Error::NoConnection("algebraic constraint is singular".into()));
            }
            du[..nh].copy_from_slice(&rhs);
        }
        Ok(du)
    }

    /// Linearization of the reduced field at an endstate.
    fn rest_jacobian(&self, end: &DVector<f64>) -> DMatrix<f64> {
        let u2 = &end.as_slice()[self.nh..];
        *self.guess.borrow_mut() = end.as_slice()[..self.nh].to_vec();
        let jac = fd_jacobian(
            |x, o| {
                self.rhs(x, o).expect("elimination near an endstate");
            },
            u2,
            self.r,
        );
        *self.guess.borrow_mut() = self.u_minus.as_slice()[..self.nh].to_vec();
        jac
    }
}

fn real_eigvecs(j: &DMatrix<f64>) -> Vec<(Complex64, DVector<Complex64>)> {
    let r = j.nrows();
    let ev = j.complex_eigenvalues();
    let jc: DMatrix<Complex64> = j.map(|v| Complex64::new(v, 0.0));
    ev.iter()
        .map(|&mu| {
            let m = &jc - DMatrix::<Complex64>::identity(r, r) * mu;
            let (v, _) = crate::linalg::null_vector(&m);
            (mu, v)
        })
        .collect()
}

/// Solves for the standing profile connecting `u_minus` to `u_plus`.
pub fn solve_profile(
    model: &FluxViscositySystem,
    u_minus: &DVector<f64>,
    u_plus: &DVector<f64>,
    settings: &ProfileSettings,
) -> Result<ShockProfile> {
    let n = model.n();
    if u_minus.len() != n || u_plus.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u_minus.len().max(u_plus.len()) });
    }
    let jump = u_plus - u_minus;
    if jump.amax() <= 1e-12 * (1.0 + u_minus.amax()) {
        return Err(Error::NotAShock);
    }
    if !(settings.h > 0.0) || !(settings.halfwidth > settings.h) {
        return Err(Error::InvalidInput("profile grid needs 0 < h < X".into()));
    }
    let f1m = model.f1(u_minus);
    let f1p = model.f1(u_plus);
    let rh = (&f1p - &f1m).amax() / (1.0 + f1m.amax());
    if rh > 1e-8 {
        return Err(Error::RankineHugoniot { residual: rh });
    }
    let report = check_assumptions(model, u_minus, u_plus)?;
    if report.a2_ok.is_none() {
        return Err(Error::SpectralDegeneracy("endstate matrix A is not diagonalizable with real eigenvalues".into()));
    }
    if !report.structural_ok() {
        return Err(Error::InvalidInput(format!(
            "endstate assumptions fail (coupling: {:?}, viscosity block positive: {})",
            report.a2_ok, report.a3_ok
        )));
    }
    endstate_characteristics(model, u_minus, u_plus)?;

    let red = Reduced::new(model, u_minus, u_plus)?;
    let k_pin = jump.iamax();
    let shift = ShiftConvention { component: k_pin, value: 0.5 * (u_minus[k_pin] + u_plus[k_pin]) };
    let pin = shoot_to_pin(&red, shift)?;

    let mut x_half = settings.halfwidth;
    loop {
        let p = build_profile(&red, &pin, x_half, settings.h, shift)?;
        if p.endstate_error <= settings.tol_endstate || !settings.adaptive {
            if p.endstate_error > settings.tol_endstate {
                return Err(Error::NoConnection(format!(
                    "endstates not reached within X = {x_half}: error {:.3e}",
                    p.endstate_error
                )));
            }
            if p.residual > settings.tol_profile {
                return Err(Error::Integration(format!(
                    "profile residual {:.3e} exceeds tolerance {:.1e} (refine h)",
                    p.residual, settings.tol_profile
                )));
            }
            return Ok(p);
        }
        if 2.0 * x_half > settings.max_halfwidth {
            return Err(Error::NoConnection(format!(
                "endstate tolerance not met up to X = {x_half} (error {:.3e})",
                p.endstate_error
            )));
        }
        x_half *= 2.0;
    }
}

/// Shoots along the one-dimensional unstable manifold of `U-` (or the stable
/// manifold of `U+`) until the pinned component crosses its target value.
fn shoot_to_pin(red: &Reduced<'_>, shift: ShiftConvention) -> Result<Vec<f64>> {
    let r = red.r;
    let nh = red.nh;
    let jm = red.rest_jacobian(&red.u_minus);
    let jp = red.rest_jacobian(&red.u_plus);
    let em = real_eigvecs(&jm);
    let ep = real_eigvecs(&jp);
    let unstable_m: Vec<_> = em.iter().filter(|(mu, _)| mu.re > 0.0).collect();
    let stable_p: Vec<_> = ep.iter().filter(|(mu, _)| mu.re < 0.0).collect();
    let (start_state, target_state, dir, evec) = if unstable_m.len() == 1 {
        (&red.u_minus, &red.u_plus, 1.0, unstable_m[0].1.clone())
    } else if stable_p.len() == 1 {
        (&red.u_plus, &red.u_minus, -1.0, stable_p[0].1.clone())
    } else {
        return Err(Error::NoConnection(format!(
            "no one-dimensional invariant manifold (unstable dim at U- = {}, stable dim at U+ = {})",
            unstable_m.len(),
            stable_p.len()
        )));
    };
    if evec.iter().any(|z| z.im.abs() > 1e-10) {
        return Err(Error::NoConnection("manifold direction is not real".into()));
    }
    let mut v: Vec<f64> = evec.iter().map(|z| z.re).collect();
    let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= vn);
    let s2 = &start_state.as_slice()[nh..];
    let t2 = &target_state.as_slice()[nh..];
    let toward: f64 = (0..r).map(|i| v[i] * (t2[i] - s2[i])).sum();
    let jump_scale = (0..red.n).map(|i| (red.u_plus[i] - red.u_minus[i]).abs()).fold(0.0, f64::max);
    let sign = if toward >= 0.0 { 1.0 } else { -1.0 };
    let eps0 = 1e-9 * jump_scale.max(1e-3);
    let y0: Vec<f64> = (0..r).map(|i| s2[i] + sign * eps0 * v[i]).collect();
    *red.guess.borrow_mut() = start_state.as_slice()[..nh].to_vec();

    let failure = RefCell::new(None::<Error>);
    let f = |_x: f64, y: &[f64], dy: &mut [f64]| {
        if let Err(e) = red.rhs(y, dy) {
            dy.iter_mut().for_each(|v| *v = f64::NAN);
            failure.borrow_mut().get_or_insert(e);
        }
    };
    let pin_value = |y: &[f64]| -> Result<f64> {
        let u = red.eliminate(y)?;
        Ok(u[shift.component] - shift.value)
    };
    let g0 = pin_value(&y0)?;
    let solver = Dopri5 { h_max: 0.05, ..Dopri5::default() };
    let mut prev: (f64, Vec<f64>) = (0.0, y0.clone());
    let mut crossed: Option<((f64, Vec<f64>), (f64, Vec<f64>))> = None;
    let span = 1e4;
    let res = solver.integrate(&f, 0.0, &y0, dir * span, |x, y| {
        let g = match pin_value(y) {
            Ok(g) => g,
            Err(_) => return false,
        };
        if g == 0.0 || (g > 0.0) != (g0 > 0.0) {
            crossed = Some((prev.clone(), (x, y.to_vec())));
            return false;
        }
        let dist: f64 = (0..r).map(|i| (y[i] - t2[i]).abs()).fold(0.0, f64::max);
        if dist < 1e-12 * jump_scale.max(1.0) {
            return false;
        }
        prev = (x, y.to_vec());
        true
    });
    if let Some(e) = failure.borrow_mut().take() {
        return Err(Error::NoConnection(format!("shooting failed: {e}")));
    }
    res?;
    let ((xa, ya), (xb, _)) = crossed.ok_or_else(|| Error::NoConnection("shooting orbit never crosses the pin value".into()))?;
    // Secant/bisection on a single Dormand–Prince step from the last point
    // before the crossing.
    let ga = pin_value(&ya)?;
    let (mut lo, mut hi) = (0.0, xb - xa);
    let mut best = ya.clone();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (ym, _) = solver.step(&f, xa, &ya, mid);
        let gm = pin_value(&ym)?;
        best = ym;
        if gm.abs() < 1e-15 || (hi - lo).abs() < 1e-16 {
            break;
        }
        if (gm > 0.0) == (ga > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// Integrates from the pinned state to both ends of the grid, switching to the
/// linearized endstate tail once the orbit is close to the endstate.
fn build_profile(red: &Reduced<'_>, pin: &[f64], x_half: f64, h: f64, shift: ShiftConvention) -> Result<ShockProfile> {
    let n = red.n;
    let nh = red.nh;
    let r = red.r;
    let mut m = (x_half / h).round() as usize;
    if m % 2 == 1 {
        m += 1;
    }
    let x_half = m as f64 * h;
    let npts = 2 * m + 1;
    let x: Vec<f64> = (0..npts).map(|i| -x_half + i as f64 * h).collect();
    let mut u2 = vec![0.0; npts * r];
    u2[m * r..(m + 1) * r].copy_from_slice(pin);

    let failure = RefCell::new(None::<Error>);
    let f = |_x: f64, y: &[f64], dy: &mut [f64]| {
        if let Err(e) = red.rhs(y, dy) {
            dy.iter_mut().for_each(|v| *v = f64::NAN);
            failure.borrow_mut().get_or_insert(e);
        }
    };
    let solver = Dopri5 { h_max: h, ..Dopri5::default() };
    let jump_scale = (0..n).map(|i| (red.u_plus[i] - red.u_minus[i]).abs()).fold(0.0, f64::max).max(1e-300);

    for &(end, step) in &[(&red.u_plus, 1isize), (&red.u_minus, -1isize)] {
        let e2 = &end.as_slice()[nh..];
        let jac = red.rest_jacobian(end);
        let eig = real_eigvecs(&jac);
        // decaying modes in the direction of integration
        let decaying: Vec<(Complex64, DVector<Complex64>)> =
            eig.into_iter().filter(|(mu, _)| mu.re * step as f64 <= 0.0).collect();
        *red.guess.borrow_mut() = {
            let u = red.eliminate_from_guess(pin);
            u[..nh].to_vec()
        };
        let mut y = pin.to_vec();
        let mut i = m as isize;
        let mut best_dist = f64::INFINITY;
        let mut rising = 0;
        let mut tail: Option<(f64, Vec<Complex64>)> = None;
        loop {
            let inext = i + step;
            if inext < 0 || inext >= npts as isize {
                break;
            }
            let xi = x[i as usize];
            let xn = x[inext as usize];
            let ynext = if let Some((xs, ref coef)) = tail {
                let mut out = e2.to_vec();
                for (c, (mu, v)) in coef.iter().zip(decaying.iter()) {
                    let fac = *c * (*mu * (xn - xs)).exp();
                    for k in 0..r {
                        out[k] += (fac * v[k]).re;
                    }
                }
                out
            } else {
                let (_, yn) = solver.integrate(&f, xi, &y, xn, |_, _| true)?;
                if let Some(e) = failure.borrow_mut().take() {
                    return Err(Error::NoConnection(format!("profile integration failed: {e}")));
                }
                yn
            };
            let dist = (0..r).map(|k| (ynext[k] - e2[k]).abs()).fold(0.0, f64::max);
            if tail.is_none() {
                if dist < best_dist {
                    best_dist = dist;
                    rising = 0;
                } else if dist < 1e-2 * jump_scale {
                    rising += 1;
                }
                let close = dist < 1e-9 * jump_scale;
                if close || rising >= 2 {
                    let coef = tail_coefficients(&ynext, e2, &decaying)?;
                    tail = Some((xn, coef));
                }
            }
            u2[inext as usize * r..(inext as usize + 1) * r].copy_from_slice(&ynext);
            y = ynext;
            i = inext;
        }
    }

    let mut u = vec![0.0; npts * n];
    *red.guess.borrow_mut() = red.u_minus.as_slice()[..nh].to_vec();
    for i in 0..npts {
        let full = red.eliminate(&u2[i * r..(i + 1) * r])?;
        u[i * n..(i + 1) * n].copy_from_slice(&full);
    }
    let mut p = ShockProfile {
        n,
        h,
        halfwidth: x_half,
        x,
        u,
        du: vec![0.0; npts * n],
        w: vec![0.0; npts * n],
        dw: vec![0.0; npts * n],
        u_minus: red.u_minus.clone(),
        u_plus: red.u_plus.clone(),
        residual: 0.0,
        endstate_error: 0.0,
        shift,
    };
    for i in 0..npts {
        let du = red.full_derivative(p.u_at(i))?;
        p.du[i * n..(i + 1) * n].copy_from_slice(&du);
    }
    fill_w(red.model, &mut p);
    p.residual = residual(red, &p);
    p.endstate_error = endstate_error(&p);
    Ok(p)
}

impl Reduced<'_> {
    fn eliminate_from_guess(&self, u2: &[f64]) -> Vec<f64> {
        *self.guess.borrow_mut() = self.u_minus.as_slice()[..self.nh].to_vec();
        self.eliminate(u2).unwrap_or_else(|_| {
            let mut u = self.u_minus.as_slice().to_vec();
            u[self.nh..].copy_from_slice(u2);
            u
        })
    }
}

fn tail_coefficients(y: &[f64], end: &[f64], modes: &[(Complex64, DVector<Complex64>)]) -> Result<Vec<Complex64>> {
    let r = y.len();
    if modes.is_empty() {
        return Ok(vec![]);
    }
    let k = modes.len();
    let mut a = DMatrix::<Complex64>::zeros(r, k);
    for (j, (_, v)) in modes.iter().enumerate() {
        a.set_column(j, v);
    }
    let b = DVector::<Complex64>::from_iterator(r, (0..r).map(|i| Complex64::new(y[i] - end[i], 0.0)));
    let svd = a.svd(true, true);
    let c = svd.solve(&b, 1e-14).map_err(|e| Error::NoConnection(format!("tail fit failed: {e}")))?;
    Ok(c.iter().cloned().collect())
}

fn fill_w(model: &FluxViscositySystem, p: &mut ShockProfile) {
    let n = p.n;
    let mut df0 = vec![0.0; n * n];
    for i in 0..p.len() {
        let u = p.u_at(i).to_vec();
        let du = p.du_at(i).to_vec();
        let mut w = vec![0.0; n];
        model.f0_into(&u, &mut w);
        model.df0_into(&u, &mut df0);
        p.w[i * n..(i + 1) * n].copy_from_slice(&w);
        for a in 0..n {
            p.dw[i * n + a] = (0..n).map(|b| df0[a * n + b] * du[b]).sum();
        }
    }
}

/// `max |B(U) D6 U - (F1(U) - F1(U-))|` over interior points, together with
/// the algebraic rows.
fn residual(red: &Reduced<'_>, p: &ShockProfile) -> f64 {
    let n = p.n;
    let len = p.len();
    if len < 7 {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    let mut f = vec![0.0; n];
    let mut b = vec![0.0; n * n];
    for i in 3..len - 3 {
        let u = p.u_at(i);
        let mut d = vec![0.0; n];
        for (k, w) in D1_6.iter().enumerate() {
            let uj = p.u_at(i + k - 3);
            for a in 0..n {
                d[a] += w * uj[a];
            }
        }
        d.iter_mut().for_each(|v| *v /= p.h);
        red.model.f1_into(u, &mut f);
        red.model.visc_into(u, &mut b);
        for a in 0..n {
            let bd: f64 = (0..n).map(|c| b[a * n + c] * d[c]).sum();
            worst = worst.max((bd - (f[a] - red.f1_minus[a])).abs());
        }
    }
    worst
}

fn endstate_error(p: &ShockProfile) -> f64 {
    let n = p.n;
    let last = p.len() - 1;
    (0..n)
        .map(|k| (p.u_at(0)[k] - p.u_minus[k]).abs().max((p.u_at(last)[k] - p.u_plus[k]).abs()))
        .fold(0.0, f64::max)
}

/// Sixth-order finite-difference derivative of every component of a
/// row-major field.
pub fn fd_derivative_field(values: &[f64], n: usize, h: f64) -> Vec<f64> {
    let len = values.len() / n;
    let mut out = vec![0.0; values.len()];
    for k in 0..n {
        let comp: Vec<f64> = (0..len).map(|i| values[i * n + k]).collect();
        let d = derivative(&comp, h);
        for i in 0..len {
            out[i * n + k] = d[i];
        }
    }
    out
}
