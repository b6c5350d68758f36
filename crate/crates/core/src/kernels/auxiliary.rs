//! Time-integrated Gaussian kernel bounds evaluated by nested adaptive
//! quadrature, with a boundedness verdict from their late-time growth.

use std::sync::Arc;

use serde::Serialize;

use super::Theta;
use crate::error::{Error, Result};
use crate::quad::{integrate_breaks, QuadTol};

/// A source `f(y, tau)` concentrated within `width` of `y = 0`.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    pub width: f64,
    f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction").field("name", &self.name).field("width", &self.width).finish()
    }
}

impl TestFunction {
    pub fn new(name: &str, width: f64, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> TestFunction {
        TestFunction { name: name.into(), width, f: Arc::new(f) }
    }

    /// `pi^{-1/2} exp(-y^2) (1 + tau)^{-3/4}`, unit mass at `tau = 0`.
    pub fn gaussian() -> TestFunction {
        TestFunction::new("gaussian", 1.0, |y, tau| {
            (-y * y).exp() * (1.0 + tau).powf(-0.75) / std::f64::consts::PI.sqrt()
        })
    }

    pub fn zero() -> TestFunction {
        TestFunction::new("zero", 1.0, |_, _| 0.0)
    }

    pub fn eval(&self, y: f64, tau: f64) -> f64 {
        (self.f)(y, tau)
    }

    fn sample_points(&self) -> impl Iterator<Item = f64> + '_ {
        let w = 12.0 * self.width;
        (0..=2400).map(move |k| -w + 2.0 * w * k as f64 / 2400.0)
    }

    /// `|f(., tau)|_{L^1}`.
    pub fn l1(&self, tau: f64, tol: QuadTol) -> Result<f64> {
        let w = 12.0 * self.width;
        integrate_breaks(&mut |y| self.eval(y, tau).abs(), &[-w, 0.0, w], tol)
    }

    /// `|f(., tau)|_{L^2}`.
    pub fn l2(&self, tau: f64, tol: QuadTol) -> Result<f64> {
        let w = 12.0 * self.width;
        Ok(integrate_breaks(&mut |y| self.eval(y, tau).powi(2), &[-w, 0.0, w], tol)?.sqrt())
    }

    /// `|f(., tau)|_{L^inf}` by dense sampling.
    pub fn linf(&self, tau: f64) -> f64 {
        self.sample_points().fold(0.0, |m, y| m.max(self.eval(y, tau).abs()))
    }
}

/// Parameters of the auxiliary bound checks.
#[derive(Debug, Clone, Serialize)]
pub struct AuxSettings {
    /// Speed and width of the moving Gaussian.
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    /// Decay rate of the localized and damped templates.
    pub eta: f64,
    /// Observation stations.
    pub stations: Vec<f64>,
    /// Final time of the scalar time-integral check.
    pub tmax_test: f64,
    /// Final time of the single time integral.
    pub tmax_single: f64,
    /// Final time of the convolution-in-time integrals.
    pub tmax_nested: f64,
    pub growth_tol: f64,
    #[serde(skip)]
    pub tol: QuadTol,
}

impl Default for AuxSettings {
    fn default() -> Self {
        AuxSettings {
            a: 1.0,
            b: 1.0,
            eps: 0.1,
            eta: 1.0,
            stations: vec![-1.0, 1.0],
            tmax_test: 1e6,
            tmax_single: 1e4,
            tmax_nested: 1e3,
            growth_tol: 0.05,
            tol: QuadTol::default(),
        }
    }
}

/// One inequality traced in time.
#[derive(Debug, Clone, Serialize)]
pub struct AuxEntry {
    pub name: String,
    pub station: Option<f64>,
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Running supremum of `lhs / rhs`.
    pub running_sup: Vec<f64>,
    /// Time ratio over which growth is measured.
    pub window: f64,
    /// Relative growth of the running supremum over the final window.
    pub growth: f64,
    pub bounded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuxReport {
    pub settings: AuxSettings,
    pub function: String,
    pub entries: Vec<AuxEntry>,
    pub pass: bool,
}

fn inner_tol(tol: QuadTol) -> QuadTol {
    QuadTol { abs: tol.abs * 1e-3, rel: tol.rel * 1e-2, max_intervals: tol.max_intervals }
}

/// Sorted, deduplicated break points clipped to `[lo, hi]`.
fn breaks(mut pts: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    pts.push(lo);
    pts.push(hi);
    let mut v: Vec<f64> = pts.into_iter().filter(|p| p.is_finite()).map(|p| p.clamp(lo, hi)).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
    v
}

/// `int_1^t s^{-1-eps} exp(-(a s - |z|)^2 / (b s)) ds`.
fn test_inner(z: f64, t: f64, a: f64, b: f64, eps: f64, tol: QuadTol) -> Result<f64> {
    if t <= 1.0 {
        return Ok(0.0);
    }
    let mut pts = vec![];
    if a > 0.0 {
        let s0 = z.abs() / a;
        let w = (b * s0.max(1.0)).sqrt() / a;
        pts.extend([s0 - 12.0 * w, s0 - 3.0 * w, s0, s0 + 3.0 * w, s0 + 12.0 * w]);
    }
    let mut p = 2.0;
    while p < t {
        pts.push(p);
        p *= 4.0;
    }
    let br = breaks(pts, 1.0, t);
    integrate_breaks(
        &mut |s: f64| {
            let d = a * s - z.abs();
            s.powf(-1.0 - eps) * (-d * d / (b * s)).exp()
        },
        &br,
        tol,
    )
}

/// `L^2_z` norm of `int_1^t s^{-1-eps} exp(-(a s - |z|)^2 / (b s)) ds`.
pub fn test_integral(a: f64, b: f64, eps: f64, t: f64, tol: QuadTol) -> Result<f64> {
    if a == 0.0 || !(b > 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidInput("time integral needs a != 0, b > 0 and eps > 0".into()));
    }
    let it = inner_tol(tol);
    let amag = a.abs();
    let zmax = amag * t + 40.0 * (b * t).sqrt() + 40.0;
    let mut pts = vec![amag, amag * t];
    let mut p = 1.0;
    while p < zmax {
        pts.push(p);
        p *= 2.0;
    }
    let br = breaks(pts, 0.0, zmax);
    let mut failure = None;
    let sq = integrate_breaks(
        &mut |z: f64| match test_inner(z, t, a, b, eps, it) {
            Ok(v) => v * v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        &br,
        tol,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((2.0 * sq).sqrt())
}

/// `int theta(x - y, s) f(y, tau) w(y) dy` with break points at both
/// concentrations.
fn theta_against(theta: &Theta, x: f64, s: f64, f: &TestFunction, tau: f64, weight: &dyn Fn(f64) -> f64, tol: QuadTol) -> Result<f64> {
    let c = x - theta.a * s;
    let wt = (theta.b * s).sqrt();
    let wf = f.width;
    let lo = (c - 10.0 * wt).min(-12.0 * wf);
    let hi = (c + 10.0 * wt).max(12.0 * wf);
    let pts = vec![c - 10.0 * wt, c - 2.0 * wt, c, c + 2.0 * wt, c + 10.0 * wt, -12.0 * wf, -2.0 * wf, 0.0, 2.0 * wf, 12.0 * wf];
    let br = breaks(pts, lo, hi);
    integrate_breaks(&mut |y: f64| theta.eval(x - y, s) * f.eval(y, tau) * weight(y), &br, tol)
}

/// Evaluates the cumulative integral `int_0^{t_k} g(s) ds` at each time.
fn cumulative(g: &mut dyn FnMut(f64) -> f64, times: &[f64], tol: QuadTol) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    let mut prev = 0.0f64;
    for &t in times {
        let mut pts = vec![];
        let mut p = prev.max(1e-3);
        while p < t {
            pts.push(p);
            p *= 2.0;
        }
        let br = breaks(pts, prev, t);
        acc += integrate_breaks(&mut |s| g(s), &br, tol)?;
        out.push(acc);
        prev = t;
    }
    Ok(out)
}

fn run_cumulative(mut g: impl FnMut(f64) -> Result<f64>, times: &[f64], tol: QuadTol) -> Result<Vec<f64>> {
    let mut failure = None;
    let v = cumulative(
        &mut |s| match g(s) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        times,
        tol,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `int_0^t |int theta(x - y, s) f(y) dy| ds` at each time, with `f`
/// taken at `tau = 0`.
pub fn aux1(theta: &Theta, f: &TestFunction, x: f64, times: &[f64], tol: QuadTol) -> Result<Vec<f64>> {
    let it = inner_tol(tol);
    run_cumulative(|s| Ok(theta_against(theta, x, s, f, 0.0, &|_| 1.0, it)?.abs()), times, tol)
}

/// `int_0^t (1 + s)^{-1/2} |int_0^s int theta(x - y, s - tau)
/// ((s - tau)^{-1/2} + exp(-eta |y|)) f(y, tau) dy dtau| ds` at each time.
pub fn aux2(theta: &Theta, eta: f64, f: &TestFunction, x: f64, times: &[f64], tol: QuadTol) -> Result<Vec<f64>> {
    let it = inner_tol(tol);
    let iit = inner_tol(it);
    let localized = move |y: f64| (-eta * y.abs()).exp();
    run_cumulative(
        |s| {
            if s <= 0.0 {
                return Ok(0.0);
            }
            // s - tau = u^2 removes the (s - tau)^{-1/2} singularity
            let mut failure = None;
            let su = s.sqrt();
            let br = breaks(vec![0.5 * su, 0.1 * su, 0.01 * su], 0.0, su);
            let v = integrate_breaks(
                &mut |u: f64| {
                    let sigma = u * u;
                    if sigma <= 0.0 {
                        // u -> 0 limit of 2 int theta f dy
                        return 2.0 * (std::f64::consts::PI * theta.b).sqrt() * f.eval(x, s);
                    }
                    let tau = s - sigma;
                    let r = theta_against(theta, x, sigma, f, tau, &|_| 1.0, iit)
                        .and_then(|p| Ok((p, theta_against(theta, x, sigma, f, tau, &localized, iit)?)));
                    match r {
                        Ok((p, q)) => 2.0 * p + 2.0 * u * q,
                        Err(e) => {
                            failure.get_or_insert(e);
                            0.0
                        }
                    }
                },
                &br,
                it,
            )?;
            match failure {
                Some(e) => Err(e),
                None => Ok((1.0 + s).powf(-0.5) * v.abs()),
            }
        },
        times,
        tol,
    )
}

/// `int_0^t (1 + s)^{-1/2} int_0^s exp(-eta (s - tau)) |f(., tau)|_inf dtau ds`
/// at each time.
pub fn aux3(eta: f64, f: &TestFunction, times: &[f64], tol: QuadTol) -> Result<Vec<f64>> {
    let it = inner_tol(tol);
    run_cumulative(
        |s| {
            if s <= 0.0 {
                return Ok(0.0);
            }
            let lo = (s - 40.0 / eta).max(0.0);
            let br = breaks(vec![s - 1.0 / eta, s - 5.0 / eta], lo, s);
            let v = integrate_breaks(&mut |tau: f64| (-eta * (s - tau)).exp() * f.linf(tau), &br, it)?;
            Ok((1.0 + s).powf(-0.5) * v)
        },
        times,
        tol,
    )
}

fn time_sequence(tmax: f64, per_decade: usize) -> Vec<f64> {
    let decades = tmax.log10().ceil().max(1.0) as usize;
    let n = decades * per_decade;
    let mut v: Vec<f64> = (0..=n).map(|k| 10f64.powf(tmax.log10() * k as f64 / n as f64)).collect();
    v[n] = tmax;
    v
}

fn entry(name: &str, station: Option<f64>, times: Vec<f64>, lhs: Vec<f64>, rhs: Vec<f64>, window: f64, growth_tol: f64) -> AuxEntry {
    let mut running_sup = Vec::with_capacity(lhs.len());
    let mut sup = 0.0f64;
    for (l, r) in lhs.iter().zip(&rhs) {
        let q = if *l == 0.0 { 0.0 } else { l / r };
        sup = sup.max(q);
        running_sup.push(sup);
    }
    let last = *running_sup.last().unwrap_or(&0.0);
    let tend = *times.last().unwrap_or(&1.0);
    let k = times.iter().rposition(|&t| t <= tend / window * (1.0 + 1e-9)).unwrap_or(0);
    let before = running_sup[k];
    let growth = if last == 0.0 { 0.0 } else if before == 0.0 { f64::INFINITY } else { (last - before) / before };
    AuxEntry {
        name: name.into(),
        station,
        times,
        lhs,
        rhs,
        running_sup,
        window,
        bounded: growth.is_finite() && growth < growth_tol,
        growth,
    }
}

/// Traces every auxiliary inequality in time for the test function `f`.
pub fn verify_aux_bounds(settings: &AuxSettings, f: &TestFunction) -> Result<AuxReport> {
    let theta = Theta::new(settings.a, settings.b)?;
    if !(settings.eta > 0.0) || !(settings.eps > 0.0) {
        return Err(Error::InvalidInput("auxiliary bounds need eta > 0 and eps > 0".into()));
    }
    let tol = settings.tol;
    let mut entries = Vec::new();

    // scalar time integral: value at tmax against tmax / 100
    let times: Vec<f64> = time_sequence(settings.tmax_test, 1).into_iter().filter(|&t| t >= 10.0).collect();
    let lhs = times.iter().map(|&t| test_integral(settings.a, settings.b, settings.eps, t, tol)).collect::<Result<Vec<_>>>()?;
    let rhs = vec![1.0; times.len()];
    entries.push(entry("test", None, times, lhs, rhs, 100.0, settings.growth_tol));

    let norm = f.l1(0.0, tol)? + f.linf(0.0);
    let single = time_sequence(settings.tmax_single, 4);
    let nested = time_sequence(settings.tmax_nested, 4);
    let rhs2 = {
        let eps = settings.eps;
        let mut failure = None;
        let v = cumulative(
            &mut |s| match f.l2(s, inner_tol(tol)) {
                Ok(n) => (1.0 + s).powf(-0.5 + eps) * n,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            &nested,
            tol,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        v
    };
    let rhs3 = cumulative(&mut |s| (1.0 + s).powf(-0.5) * f.linf(s), &nested, tol)?;
    for &x in &settings.stations {
        let lhs = aux1(&theta, f, x, &single, tol)?;
        entries.push(entry("aux1", Some(x), single.clone(), lhs, vec![norm; single.len()], 10.0, settings.growth_tol));
        let lhs = aux2(&theta, settings.eta, f, x, &nested, tol)?;
        entries.push(entry("aux2", Some(x), nested.clone(), lhs, rhs2.clone(), 10.0, settings.growth_tol));
    }
    let lhs = aux3(settings.eta, f, &nested, tol)?;
    entries.push(entry("aux3", None, nested.clone(), lhs, rhs3, 10.0, settings.growth_tol));
    let pass = entries.iter().all(|e| e.bounded);
    Ok(AuxReport { settings: settings.clone(), function: f.name.clone(), entries, pass })
}
