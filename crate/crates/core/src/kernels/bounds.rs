//! Numerical check of the six pointwise bounds on `e(y, t)` and its
//! derivatives, with one fitted constant per bound.

use rayon::prelude::*;
use serde::Serialize;

use super::kernel_e::KernelE;
use super::errfn;
use crate::error::{Error, Result};

/// Grid and template parameters for [`verify_ebounds`].
#[derive(Debug, Clone, Serialize)]
pub struct EboundsSettings {
    pub ny: usize,
    pub nt: usize,
    pub tmax: f64,
    /// Refinement factor of the second grid.
    pub refine: usize,
    /// Largest accepted relative drift of a fitted constant.
    pub drift_tol: f64,
    /// Decay rate `eta` of the `gamma`-weighted terms.
    pub eta: f64,
    /// Points where both sides fall below this are skipped.
    pub floor: f64,
}

impl Default for EboundsSettings {
    fn default() -> Self {
        EboundsSettings { ny: 200, nt: 200, tmax: 1e3, refine: 2, drift_tol: 0.1, eta: 0.5, floor: 1e-250 }
    }
}

/// One bound with its fitted constants on the coarse and refined grids.
#[derive(Debug, Clone, Serialize)]
pub struct BoundItem {
    pub name: String,
    pub inequality: String,
    pub constant: f64,
    pub constant_refined: f64,
    pub drift: f64,
    /// `(y, t)` where the coarse ratio peaks.
    pub worst: (f64, f64),
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EboundsReport {
    pub gamma: u8,
    pub eta: f64,
    /// Speed `a` in the `errfn((|y| - a t) / (M sqrt t))` template.
    pub errfn_speed: f64,
    pub errfn_width: f64,
    /// `M` in the Gaussian templates.
    pub gaussian_width: f64,
    pub y_extent: f64,
    pub max_l_derivative: f64,
    /// `gamma = 0` and the eigenvector field is constant, so the
    /// `gamma`-weighted terms are identically zero.
    pub gamma_terms_vanish: bool,
    pub items: Vec<BoundItem>,
    pub pass: bool,
}

struct Templates {
    a: f64,
    m_err: f64,
    m_gauss: f64,
    eta: f64,
    gamma: f64,
}

const NAMES: [(&str, &str); 6] = [
    ("i", "|e| <= C sum(errfn(xi+) - errfn(xi-))"),
    ("ii", "|e - e(inf)| <= C errfn((|y| - a t) / (M sqrt t))"),
    ("iii", "|e_t| <= C t^-1/2 sum exp(-|y + a_i t|^2 / (M t))"),
    ("iv", "|e_y| <= C (t^-1/2 sum exp(-|y + a_i t|^2 / (M t)) + gamma exp(-eta |y|) sum(errfn(xi+) - errfn(xi-)))"),
    ("v", "|e_y - e_y(inf)| <= C t^-1/2 sum exp(-|y + a_i t|^2 / (M t))"),
    ("vi", "|e_yt| <= C (t^-1 + gamma t^-1/2 exp(-eta |y|)) sum exp(-|y + a_i t|^2 / (M t))"),
];

fn amax(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `(lhs, rhs)` for the six bounds at one point.
fn sides(k: &KernelE, tp: &Templates, y: f64, t: f64) -> [(f64, f64); 6] {
    let v = k.eval(y, t);
    let es = k.errfn_sum(y, t);
    let gs = k.gaussian_sum(y, t, tp.m_gauss);
    let rt = t.sqrt();
    let decay = (-tp.eta * y.abs()).exp();
    let z = (y.abs() - tp.a * t) / (tp.m_err * rt);
    let err_template = errfn(z);
    [
        (amax(&v.e), es),
        (amax(&k.minus_infinity(y, t)), err_template),
        (amax(&v.e_t), gs / rt),
        (amax(&v.e_y), gs / rt + tp.gamma * decay * es),
        (amax(&k.ey_minus_infinity(y, t)), gs / rt),
        (amax(&v.e_yt), (1.0 / t + tp.gamma * decay / rt) * gs),
    ]
}

fn grid(n: usize, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..n).map(|i| f(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect()
}

/// Max ratio per bound and its location.
fn fit(k: &KernelE, tp: &Templates, ny: usize, nt: usize, tmax: f64, ymax: f64, floor: f64) -> [(f64, (f64, f64)); 6] {
    let ts = grid(nt, 0.0, tmax.ln(), f64::exp);
    let ys = grid(ny, -1.0, 1.0, |s| ymax * s * s.abs());
    let rows: Vec<[(f64, (f64, f64)); 6]> = ts
        .par_iter()
        .map(|&t| {
            let mut best = [(0.0, (0.0, t)); 6];
            for &y in &ys {
                for (b, (lhs, rhs)) in best.iter_mut().zip(sides(k, tp, y, t)) {
                    if lhs < floor && rhs < floor {
                        continue;
                    }
                    let r = if rhs > 0.0 { lhs / rhs } else { f64::INFINITY };
                    if r > b.0 || r.is_nan() {
                        *b = (if r.is_nan() { f64::INFINITY } else { r }, (y, t));
                    }
                }
            }
            best
        })
        .collect();
    let mut out = [(0.0, (0.0, 1.0)); 6];
    for row in rows {
        for (o, r) in out.iter_mut().zip(row) {
            if r.0 > o.0 {
                *o = r;
            }
        }
    }
    out
}

/// Fits the smallest constant for each bound on a `ny x nt` grid with
/// `t` log-spaced in `[1, tmax]` and `y` clustered at the shock on
/// `[-Y, Y]`, `Y = 1.5 max|a| tmax`, then repeats on a refined grid.
pub fn verify_ebounds(kernel: &KernelE, settings: &EboundsSettings) -> Result<EboundsReport> {
    if settings.ny < 2 || settings.nt < 2 || !(settings.tmax > 1.0) {
        return Err(Error::InvalidInput("bound grid needs ny, nt >= 2 and tmax > 1".into()));
    }
    if kernel.minus.is_empty() && kernel.plus.is_empty() {
        return Err(Error::InvalidInput("kernel has no outgoing modes".into()));
    }
    let (amin, amax_speed, bmax) = kernel.speed_and_rate_range();
    let gamma = kernel.gamma;
    let eta = settings.eta;
    if gamma == 1 && !(eta > 0.0) {
        return Err(Error::InvalidInput("undercompressive bounds need eta > 0".into()));
    }
    let tp = Templates {
        a: 0.5 * amin,
        m_err: 2.0 * bmax.sqrt(),
        m_gauss: 8.0 * bmax,
        eta,
        gamma: gamma as f64,
    };
    let ymax = 1.5 * amax_speed * settings.tmax;
    let coarse = fit(kernel, &tp, settings.ny, settings.nt, settings.tmax, ymax, settings.floor);
    let rf = settings.refine.max(1);
    let fine = fit(kernel, &tp, settings.ny * rf, settings.nt * rf, settings.tmax, ymax, settings.floor);
    let mut items = Vec::with_capacity(6);
    for (i, (name, ineq)) in NAMES.iter().enumerate() {
        let (c, worst) = coarse[i];
        let cf = fine[i].0;
        let drift = if c > 0.0 { (cf - c).abs() / c } else if cf == 0.0 { 0.0 } else { f64::INFINITY };
        let pass = c.is_finite() && cf.is_finite() && drift < settings.drift_tol;
        items.push(BoundItem {
            name: name.to_string(),
            inequality: ineq.to_string(),
            constant: c,
            constant_refined: cf,
            drift,
            worst,
            pass,
        });
    }
    let max_dl = kernel.max_l_derivative(ymax, 20_000);
    let pass = items.iter().all(|i| i.pass);
    Ok(EboundsReport {
        gamma,
        eta,
        errfn_speed: tp.a,
        errfn_width: tp.m_err,
        gaussian_width: tp.m_gauss,
        y_extent: ymax,
        max_l_derivative: max_dl,
        gamma_terms_vanish: gamma == 0 && max_dl == 0.0,
        items,
        pass,
    })
}
