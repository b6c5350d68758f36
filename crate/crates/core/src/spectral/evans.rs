//! Evans function by compound-matrix integration with analytic endstate
//! bases transported in `lambda` by Kato's equation.

use num_complex::Complex64;

use super::compound::{ExteriorPower, TopWedge};
use super::system::{EigenvalueOde, Side};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::models::FluxViscositySystem;
use crate::profile::ShockProfile;

/// Evaluation settings.
#[derive(Debug, Clone, Copy)]
pub struct EvansSettings {
    /// Rescale the propagated wedge whenever its norm leaves
    /// `[1 / threshold, threshold]`; `1` rescales at every step.
    pub rescale_threshold: f64,
    /// Kato steps satisfy `|dlambda| <= kato_step * min(1, |lambda|)`.
    pub kato_step: f64,
}

impl Default for EvansSettings {
    fn default() -> Self {
        EvansSettings { rescale_threshold: 1e3, kato_step: 0.02 }
    }
}

/// Analytic bases of the two bundles at one spectral parameter.
#[derive(Debug, Clone)]
pub struct AnalyticBasis {
    pub lambda: Complex64,
    /// `dim x k_minus` basis of the unstable bundle at `-inf`.
    pub minus: CMatrix,
    /// `dim x k_plus` basis of the stable bundle at `+inf`.
    pub plus: CMatrix,
}

/// Evans function evaluator for one profile.
#[derive(Debug, Clone)]
pub struct Evans {
    pub ode: EigenvalueOde,
    pub settings: EvansSettings,
    ext_minus: ExteriorPower,
    ext_plus: ExteriorPower,
    top: TopWedge,
    /// Compounds of `M0` and `M1` on `x <= 0` (indices `0..=c`).
    c0_minus: Vec<f64>,
    c1_minus: Vec<f64>,
    /// Compounds on `x >= 0` (indices `c..len`, stored from `c`).
    c0_plus: Vec<f64>,
    c1_plus: Vec<f64>,
}

/// One evaluation `D = exp(log_scale) * wedge`.
#[derive(Debug, Clone, Copy)]
pub struct EvansValue {
    pub lambda: Complex64,
    pub wedge: Complex64,
    /// Sum of the logged positive rescaling factors.
    pub log_scale: f64,
}

impl EvansValue {
    pub fn value(&self) -> Complex64 {
        self.wedge * self.log_scale.exp()
    }
}

impl Evans {
    pub fn new(model: &FluxViscositySystem, profile: &ShockProfile, settings: EvansSettings) -> Result<Self> {
        let ode = EigenvalueOde::new(model, profile)?;
        Self::from_ode(ode, settings)
    }

    pub fn from_ode(ode: EigenvalueOde, settings: EvansSettings) -> Result<Self> {
        let c = ode.center_index();
        if c % 2 != 0 {
            return Err(Error::InvalidInput("each half-grid needs an even number of cells".into()));
        }
        let d = ode.dim;
        let ext_minus = ExteriorPower::new(d, ode.k_minus);
        let ext_plus = ExteriorPower::new(d, ode.k_plus);
        let top = TopWedge::new(&ext_minus, &ext_plus);
        let dd = d * d;
        let mut c0_minus = Vec::new();
        let mut c1_minus = Vec::new();
        for i in 0..=c {
            c0_minus.extend(ext_minus.compound_real(&ode.m0[i * dd..(i + 1) * dd]));
            c1_minus.extend(ext_minus.compound_real(&ode.m1[i * dd..(i + 1) * dd]));
        }
        let mut c0_plus = Vec::new();
        let mut c1_plus = Vec::new();
        for i in c..ode.len() {
            c0_plus.extend(ext_plus.compound_real(&ode.m0[i * dd..(i + 1) * dd]));
            c1_plus.extend(ext_plus.compound_real(&ode.m1[i * dd..(i + 1) * dd]));
        }
        Ok(Evans { ode, settings, ext_minus, ext_plus, top, c0_minus, c1_minus, c0_plus, c1_plus })
    }

    /// Real basis of the bundle at `lambda = 1`: projector columns chosen by
    /// greedy pivoting.
    fn reference_basis(&self, side: Side) -> Result<CMatrix> {
        let s = self.ode.splitting(side, Complex64::new(1.0, 0.0))?;
        let p = s.projector().map(|z| Complex64::new(z.re, 0.0));
        let k = self.ode.bundle_dim(side);
        let d = self.ode.dim;
        let mut cols: Vec<usize> = Vec::new();
        let mut q = CMatrix::zeros(d, 0);
        for _ in 0..k {
            let mut best = (usize::MAX, -1.0);
            for j in 0..d {
                if cols.contains(&j) {
                    continue;
                }
                let mut v = p.column(j).into_owned();
                for c in 0..q.ncols() {
                    let qc = q.column(c);
                    let proj = qc.dotc(&v);
                    v -= qc * proj;
                }
                let nv = v.norm();
                if nv > best.1 + 1e-12 {
                    best = (j, nv);
                }
            }
            let j = best.0;
            cols.push(j);
            let mut v = p.column(j).into_owned();
            for c in 0..q.ncols() {
                let qc = q.column(c);
                let proj = qc.dotc(&v);
                v -= qc * proj;
            }
            let v = &v / Complex64::new(v.norm(), 0.0);
            let nc = q.ncols();
            q = q.insert_column(nc, Complex64::new(0.0, 0.0));
            q.set_column(nc, &v);
        }
        cols.sort_unstable();
        let mut basis = CMatrix::zeros(d, k);
        for (c, &j) in cols.iter().enumerate() {
            basis.set_column(c, &p.column(j));
        }
        Ok(basis)
    }

    /// Kato transport of both bases along the straight segment to `to`.
    pub fn transport(&self, from: &AnalyticBasis, to: Complex64) -> Result<AnalyticBasis> {
        let minus = self.transport_side(Side::Minus, &from.minus, from.lambda, to)?;
        let plus = self.transport_side(Side::Plus, &from.plus, from.lambda, to)?;
        Ok(AnalyticBasis { lambda: to, minus, plus })
    }

    fn transport_side(&self, side: Side, v0: &CMatrix, a: Complex64, b: Complex64) -> Result<CMatrix> {
        let m1 = self.ode.limit_derivative(side);
        let delta = b - a;
        let len = delta.norm();
        if len == 0.0 {
            return Ok(v0.clone());
        }
        // distance from the origin along the segment
        let t0 = (-(a.conj() * delta).re / (len * len)).clamp(0.0, 1.0);
        let dmin = (a + delta * t0).norm();
        let hmax = self.settings.kato_step * dmin.min(1.0);
        if hmax == 0.0 {
            return Err(Error::Splitting { re: 0.0, im: 0.0, reason: "transport path hits lambda = 0".into() });
        }
        let steps = (len / hmax).ceil().max(1.0) as usize;
        let rhs = |lam: Complex64, v: &CMatrix| -> Result<CMatrix> {
            let s = self.ode.splitting(side, lam)?;
            let p = s.projector();
            let dp = s.projector_derivative(&m1) * delta;
            Ok((&dp * &p - &p * &dp) * v)
        };
        let mut v = v0.clone();
        let dt = 1.0 / steps as f64;
        for j in 0..steps {
            let lam = a + delta * (j as f64 * dt);
            let half = delta * (0.5 * dt);
            let k1 = rhs(lam, &v)?;
            let k2 = rhs(lam + half, &(&v + &k1 * Complex64::new(0.5 * dt, 0.0)))?;
            let k3 = rhs(lam + half, &(&v + &k2 * Complex64::new(0.5 * dt, 0.0)))?;
            let k4 = rhs(lam + half * 2.0, &(&v + &k3 * Complex64::new(dt, 0.0)))?;
            let two = Complex64::new(2.0, 0.0);
            v += (k1 + k2 * two + k3 * two + k4) * Complex64::new(dt / 6.0, 0.0);
        }
        let p = self.ode.splitting(side, b)?.projector();
        Ok(p * v)
    }

    /// Bases at `lambda` along the canonical path: from `1` along the real
    /// axis to `|lambda|`, then along the circle of radius `|lambda|`.
    pub fn canonical_basis(&self, lambda: Complex64) -> Result<AnalyticBasis> {
        let r = lambda.norm();
        if r == 0.0 {
            return Err(Error::Splitting { re: 0.0, im: 0.0, reason: "lambda = 0 is evaluated by a contour mean".into() });
        }
        let mut basis = AnalyticBasis {
            lambda: Complex64::new(1.0, 0.0),
            minus: self.reference_basis(Side::Minus)?,
            plus: self.reference_basis(Side::Plus)?,
        };
        // radial leg, in geometric pieces so each keeps |lambda| bounded away from 0
        let mut cur = 1.0f64;
        while (cur - r).abs() > 1e-15 * r.max(1.0) {
            let next = if r < cur { (cur * 0.5).max(r) } else { (cur * 2.0).min(r) };
            basis = self.transport(&basis, Complex64::new(next, 0.0))?;
            cur = next;
        }
        // angular leg in chords of at most pi/16
        let theta = lambda.arg();
        let pieces = ((theta.abs() / (std::f64::consts::PI / 16.0)).ceil() as usize).max(1);
        for j in 1..=pieces {
            let th = theta * j as f64 / pieces as f64;
            let target = if j == pieces { lambda } else { Complex64::from_polar(r, th) };
            basis = self.transport(&basis, target)?;
        }
        Ok(basis)
    }

    /// Evans function with the canonical basis.
    pub fn eval(&self, lambda: Complex64) -> Result<Complex64> {
        let basis = self.canonical_basis(lambda)?;
        Ok(self.eval_with_basis(&basis)?.value())
    }

    /// Integrates both wedges to `x = 0` and pairs them.
    pub fn eval_with_basis(&self, basis: &AnalyticBasis) -> Result<EvansValue> {
        let lambda = basis.lambda;
        let sm = self.ode.splitting(Side::Minus, lambda)?.trace();
        let sp = self.ode.splitting(Side::Plus, lambda)?.trace();
        let c = self.ode.center_index();
        let to_col_major = |m: &CMatrix| -> Vec<Complex64> { m.iter().cloned().collect() };
        let eta_m0 = self.ext_minus.wedge_columns(&to_col_major(&basis.minus));
        let eta_p0 = self.ext_plus.wedge_columns(&to_col_major(&basis.plus));
        let (eta_m, log_m) = self.propagate(&self.ext_minus, &self.c0_minus, &self.c1_minus, eta_m0, lambda, sm, 0, c, false)?;
        let (eta_p, log_p) =
            self.propagate(&self.ext_plus, &self.c0_plus, &self.c1_plus, eta_p0, lambda, sp, 0, self.ode.len() - c - 1, true)?;
        let wedge = self.top.apply(&eta_m, &eta_p);
        if !wedge.re.is_finite() || !wedge.im.is_finite() {
            return Err(Error::Integration(format!("Evans integration overflowed at lambda = {lambda}")));
        }
        Ok(EvansValue { lambda, wedge, log_scale: log_m + log_p })
    }

    /// RK4 with step `2h` across stored compound blocks `[lo, hi]`. With
    /// `backward` the integration runs from `hi` down to `lo`.
    #[allow(clippy::too_many_arguments)]
    fn propagate(
        &self,
        ext: &ExteriorPower,
        c0: &[f64],
        c1: &[f64],
        mut eta: Vec<Complex64>,
        lambda: Complex64,
        sigma: Complex64,
        lo: usize,
        hi: usize,
        backward: bool,
    ) -> Result<(Vec<Complex64>, f64)> {
        let d = ext.dim();
        let dd = d * d;
        let h = if backward { -2.0 * self.ode.h } else { 2.0 * self.ode.h };
        let thr = self.settings.rescale_threshold;
        let mut log = 0.0;
        let f = |idx: usize, y: &[Complex64], out: &mut [Complex64]| {
            let o = idx * dd;
            for r in 0..d {
                let mut acc = -sigma * y[r];
                for col in 0..d {
                    let m = Complex64::new(c0[o + r * d + col], 0.0) + lambda * c1[o + r * d + col];
                    acc += m * y[col];
                }
                out[r] = acc;
            }
        };
        let steps = (hi - lo) / 2;
        let zero = Complex64::new(0.0, 0.0);
        let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![zero; d], vec![zero; d], vec![zero; d], vec![zero; d], vec![zero; d]);
        let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let n0 = norm(&eta);
        if n0 == 0.0 {
            return Err(Error::SpectralDegeneracy("initial wedge vanishes".into()));
        }
        for s in 0..steps {
            let (i0, i1, i2) = if backward { (hi - 2 * s, hi - 2 * s - 1, hi - 2 * s - 2) } else { (lo + 2 * s, lo + 2 * s + 1, lo + 2 * s + 2) };
            f(i0, &eta, &mut k1);
            for j in 0..d {
                tmp[j] = eta[j] + k1[j] * (0.5 * h);
            }
            f(i1, &tmp, &mut k2);
            for j in 0..d {
                tmp[j] = eta[j] + k2[j] * (0.5 * h);
            }
            f(i1, &tmp, &mut k3);
            for j in 0..d {
                tmp[j] = eta[j] + k3[j] * h;
            }
            f(i2, &tmp, &mut k4);
            for j in 0..d {
                eta[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
            }
            let nv = norm(&eta);
            if !nv.is_finite() {
                return Err(Error::Integration("wedge integration overflowed".into()));
            }
            if nv > thr || nv < 1.0 / thr {
                for z in eta.iter_mut() {
                    *z /= nv;
                }
                log += nv.ln();
            }
        }
        Ok((eta, log))
    }
}
