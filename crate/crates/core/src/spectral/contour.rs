//! Adaptive argument-principle winding numbers on piecewise contours, and the
//! root-count check of the Evans function on the right half-plane.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::evans::{AnalyticBasis, Evans};
use crate::error::{Error, Result};

/// A function sampled along a contour. Evaluation may carry state (an
/// analytic basis) that is continued from one point to the next.
pub trait ContourFunction: Sync {
    type State: Clone + Send + Sync;
    fn start(&self, lambda: Complex64) -> Result<Self::State>;
    fn advance(&self, from: &Self::State, to: Complex64) -> Result<Self::State>;
    fn value(&self, state: &Self::State) -> Result<Complex64>;
}

/// Stateless wrapper around a closure.
pub struct FnContour<F>(pub F);

impl<F> ContourFunction for FnContour<F>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    type State = Complex64;
    fn start(&self, lambda: Complex64) -> Result<Complex64> {
        Ok(lambda)
    }
    fn advance(&self, _from: &Complex64, to: Complex64) -> Result<Complex64> {
        Ok(to)
    }
    fn value(&self, state: &Complex64) -> Result<Complex64> {
        Ok((self.0)(*state))
    }
}

impl ContourFunction for Evans {
    type State = AnalyticBasis;
    fn start(&self, lambda: Complex64) -> Result<AnalyticBasis> {
        self.canonical_basis(lambda)
    }
    fn advance(&self, from: &AnalyticBasis, to: Complex64) -> Result<AnalyticBasis> {
        self.transport(from, to)
    }
    fn value(&self, state: &AnalyticBasis) -> Result<Complex64> {
        Ok(self.eval_with_basis(state)?.value())
    }
}

/// One smooth piece of a contour, parameterized by `t in [0, 1]`.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum Piece {
    /// Straight segment; with `geometric` the modulus is interpolated
    /// geometrically (both ends on one ray from the origin).
    Line { from: (f64, f64), to: (f64, f64), geometric: bool, samples: usize },
    /// Arc of the circle `|lambda| = radius` from angle `from` to `to`.
    Arc { radius: f64, from: f64, to: f64, samples: usize },
}

impl Piece {
    fn point(&self, t: f64) -> Complex64 {
        match *self {
            Piece::Line { from, to, geometric, .. } => {
                let a = Complex64::new(from.0, from.1);
                let b = Complex64::new(to.0, to.1);
                if geometric && a.norm() > 0.0 && b.norm() > 0.0 {
                    let r = a.norm() * (b.norm() / a.norm()).powf(t);
                    Complex64::from_polar(r, a.arg())
                } else {
                    a + (b - a) * t
                }
            }
            Piece::Arc { radius, from, to, .. } => Complex64::from_polar(radius, from + (to - from) * t),
        }
    }
    fn samples(&self) -> usize {
        match *self {
            Piece::Line { samples, .. } | Piece::Arc { samples, .. } => samples.max(1),
        }
    }
}

/// A closed piecewise contour.
#[derive(Debug, Clone, Serialize)]
pub struct Contour {
    pub pieces: Vec<Piece>,
}

impl Contour {
    /// Boundary of `{Re lambda >= 0, rho <= |lambda| <= R}`, positively
    /// oriented: the big arc from `-iR` to `iR`, down the imaginary axis to
    /// `i rho`, clockwise around the origin to `-i rho`, and down to `-iR`.
    pub fn excised_half_disk(big: f64, rho: f64) -> Contour {
        Contour {
            pieces: vec![
                Piece::Arc { radius: big, from: -FRAC_PI_2, to: FRAC_PI_2, samples: 48 },
                Piece::Line { from: (0.0, big), to: (0.0, rho), geometric: true, samples: 48 },
                Piece::Arc { radius: rho, from: FRAC_PI_2, to: -FRAC_PI_2, samples: 16 },
                Piece::Line { from: (0.0, -rho), to: (0.0, -big), geometric: true, samples: 48 },
            ],
        }
    }

    /// Full counterclockwise circle starting on the positive real axis.
    pub fn circle(radius: f64, samples: usize) -> Contour {
        Contour { pieces: vec![Piece::Arc { radius, from: 0.0, to: 2.0 * PI, samples }] }
    }

    /// Semicircle `|lambda| = R` in the right half-plane closed by the
    /// imaginary axis, without excision.
    pub fn half_disk(big: f64) -> Contour {
        Contour {
            pieces: vec![
                Piece::Arc { radius: big, from: -FRAC_PI_2, to: FRAC_PI_2, samples: 48 },
                Piece::Line { from: (0.0, big), to: (0.0, -big), geometric: false, samples: 96 },
            ],
        }
    }
}

/// Refinement and guard settings.
#[derive(Debug, Clone, Copy)]
pub struct WindingSettings {
    /// Largest accepted argument increment between neighbours.
    pub max_arg_step: f64,
    /// Required ratio `|D| / interpolation error` at every point.
    pub guard_ratio: f64,
    pub max_points: usize,
    /// Multiplies the initial sample counts.
    pub density: usize,
}

impl Default for WindingSettings {
    fn default() -> Self {
        WindingSettings { max_arg_step: FRAC_PI_4, guard_ratio: 10.0, max_points: 6000, density: 1 }
    }
}

/// Samples, values and winding of one contour.
#[derive(Debug, Clone, Serialize)]
pub struct ContourRun {
    #[serde(skip)]
    pub points: Vec<Complex64>,
    #[serde(skip)]
    pub values: Vec<Complex64>,
    /// Accumulated argument at each point, starting from 0.
    #[serde(skip)]
    pub cumulative_arg: Vec<f64>,
    pub total_arg: f64,
    pub winding: i64,
    pub min_modulus: f64,
    pub max_modulus: f64,
    /// Smallest `|D| / interpolation error` over the samples.
    pub guard_margin: f64,
    pub guard_ok: bool,
    pub n_points: usize,
}

#[derive(Clone)]
struct Sample<S> {
    piece: usize,
    t: f64,
    lambda: Complex64,
    state: S,
    value: Complex64,
}

fn arg_step(a: Complex64, b: Complex64) -> f64 {
    (b / a).arg()
}

/// Winding number of `f` along `contour` with adaptive bisection until each
/// argument increment is below `max_arg_step` and the min-modulus guard holds.
pub fn winding_number<F: ContourFunction>(f: &F, contour: &Contour, settings: &WindingSettings) -> Result<ContourRun> {
    let np = contour.pieces.len();
    if np == 0 {
        return Err(Error::InvalidInput("empty contour".into()));
    }
    // initial parameters; the end of each piece is the start of the next
    let mut params: Vec<(usize, f64)> = Vec::new();
    for (p, piece) in contour.pieces.iter().enumerate() {
        let m = piece.samples() * settings.density.max(1);
        for j in 0..m {
            params.push((p, j as f64 / m as f64));
        }
    }
    let lambdas: Vec<Complex64> = params.iter().map(|&(p, t)| contour.pieces[p].point(t)).collect();
    let mut states = Vec::with_capacity(lambdas.len());
    states.push(f.start(lambdas[0])?);
    for i in 1..lambdas.len() {
        let s = f.advance(&states[i - 1], lambdas[i])?;
        states.push(s);
    }
    let values: Vec<Complex64> = states.par_iter().map(|s| f.value(s)).collect::<Result<_>>()?;
    let mut samples: Vec<Sample<F::State>> = params
        .into_iter()
        .zip(lambdas)
        .zip(states)
        .zip(values)
        .map(|((((piece, t), lambda), state), value)| Sample { piece, t, lambda, state, value })
        .collect();

    loop {
        let n = samples.len();
        let errors = interpolation_errors(&samples);
        let mut refine = vec![false; n];
        for i in 0..n {
            let j = (i + 1) % n;
            let (a, b) = (samples[i].value, samples[j].value);
            if a == Complex64::new(0.0, 0.0) || b == Complex64::new(0.0, 0.0) {
                return Err(Error::ContourGuard(format!("D vanishes on the contour at {}", samples[i].lambda)));
            }
            if arg_step(a, b).abs() >= settings.max_arg_step {
                refine[i] = true;
            }
            if a.norm() <= settings.guard_ratio * errors[i] {
                refine[i] = true;
                refine[(i + n - 1) % n] = true;
            }
        }
        if !refine.iter().any(|r| *r) {
            break;
        }
        if n + refine.iter().filter(|r| **r).count() > settings.max_points {
            return Ok(finish(samples, false, settings));
        }
        // new midpoints, states continued from the left neighbour
        let mids: Vec<(usize, usize, f64, Complex64)> = (0..n)
            .filter(|&i| refine[i])
            .map(|i| {
                let j = (i + 1) % n;
                let p = samples[i].piece;
                let tj = if samples[j].piece == p && samples[j].t > samples[i].t { samples[j].t } else { 1.0 };
                let t = 0.5 * (samples[i].t + tj);
                (i, p, t, contour.pieces[p].point(t))
            })
            .collect();
        let new: Vec<Sample<F::State>> = mids
            .par_iter()
            .map(|&(i, piece, t, lambda)| {
                let state = f.advance(&samples[i].state, lambda)?;
                let value = f.value(&state)?;
                Ok(Sample { piece, t, lambda, state, value })
            })
            .collect::<Result<_>>()?;
        let mut merged = Vec::with_capacity(n + new.len());
        let mut it = new.into_iter();
        for i in 0..n {
            merged.push(samples[i].clone());
            if refine[i] {
                merged.push(it.next().expect("midpoint"));
            }
        }
        samples = merged;
    }
    Ok(finish(samples, true, settings))
}

/// Deviation of each value from the linear interpolant of its neighbours.
fn interpolation_errors<S>(s: &[Sample<S>]) -> Vec<f64> {
    let n = s.len();
    (0..n)
        .map(|i| {
            let a = &s[(i + n - 1) % n];
            let b = &s[(i + 1) % n];
            let da = (s[i].lambda - a.lambda).norm();
            let db = (b.lambda - s[i].lambda).norm();
            if da + db == 0.0 {
                return 0.0;
            }
            let interp = (a.value * db + b.value * da) / (da + db);
            (s[i].value - interp).norm()
        })
        .collect()
}

fn finish<S>(samples: Vec<Sample<S>>, converged: bool, settings: &WindingSettings) -> ContourRun {
    let n = samples.len();
    let errors = interpolation_errors(&samples);
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    cumulative.push(0.0);
    for i in 0..n {
        acc += arg_step(samples[i].value, samples[(i + 1) % n].value);
        if i + 1 < n {
            cumulative.push(acc);
        }
    }
    let winding = (acc / (2.0 * PI)).round() as i64;
    let min_modulus = samples.iter().map(|s| s.value.norm()).fold(f64::INFINITY, f64::min);
    let max_modulus = samples.iter().map(|s| s.value.norm()).fold(0.0, f64::max);
    let guard_margin = samples
        .iter()
        .zip(&errors)
        .map(|(s, e)| if *e == 0.0 { f64::INFINITY } else { s.value.norm() / e })
        .fold(f64::INFINITY, f64::min);
    ContourRun {
        points: samples.iter().map(|s| s.lambda).collect(),
        values: samples.iter().map(|s| s.value).collect(),
        cumulative_arg: cumulative,
        total_arg: acc,
        winding,
        min_modulus,
        max_modulus,
        guard_margin,
        guard_ok: converged && guard_margin > settings.guard_ratio,
        n_points: n,
    }
}

/// Outcome of the root-count check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

/// Evans contour check of the right half-plane.
#[derive(Debug, Clone, Serialize)]
pub struct EvansContourResult {
    pub big_radius: f64,
    pub small_radius: f64,
    /// `10 max |a|^2` from parabolic scaling.
    pub big_radius_heuristic: f64,
    pub excised: ContourRun,
    pub small_circle: ContourRun,
    /// `D(0)` as the mean of `D` over 64 points on the small circle.
    pub origin_value: (f64, f64),
    /// `|D(0)| / max |D|` on the excised contour.
    pub origin_relative: f64,
    pub origin_tol: f64,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

/// Mean of `f` over `m` equally spaced points of the circle `|lambda| = rho`,
/// which equals `f(0)` for analytic `f`.
pub fn circle_mean<F: ContourFunction>(f: &F, rho: f64, m: usize) -> Result<Complex64> {
    let mut state = f.start(Complex64::new(rho, 0.0))?;
    let mut states = vec![state.clone()];
    for k in 1..m {
        let lam = Complex64::from_polar(rho, 2.0 * PI * k as f64 / m as f64);
        state = f.advance(&state, lam)?;
        states.push(state.clone());
    }
    let vals: Vec<Complex64> = states.par_iter().map(|s| f.value(s)).collect::<Result<_>>()?;
    Ok(vals.iter().sum::<Complex64>() / m as f64)
}

/// Largest characteristic speed magnitude at the endstates.
pub fn default_big_radius(evans: &Evans) -> f64 {
    let amax = evans.ode.a_minus.iter().chain(&evans.ode.a_plus).map(|v| v.abs()).fold(0.0, f64::max);
    10.0 * amax * amax
}

/// Combines the three checks into a verdict: no zeros on the excised
/// half-disk, a vanishing `D(0)`, and a simple zero at the origin.
pub fn condition_d_verdict<F: ContourFunction>(
    f: &F,
    big: f64,
    rho: f64,
    heuristic: f64,
    settings: &WindingSettings,
) -> Result<EvansContourResult> {
    let excised = winding_number(f, &Contour::excised_half_disk(big, rho), settings)?;
    let small_circle = winding_number(f, &Contour::circle(rho, 64), settings)?;
    let d0 = circle_mean(f, rho, 64)?;
    let origin_tol = 1e-6;
    let origin_relative = d0.norm() / excised.max_modulus.max(f64::MIN_POSITIVE);
    let mut notes = Vec::new();
    if big < heuristic {
        notes.push(format!("R = {big} is below the parabolic-scaling heuristic {heuristic:.3}"));
    }
    let verdict = if !excised.guard_ok || !small_circle.guard_ok {
        notes.push("min-modulus guard tripped; contour passes too close to a zero".into());
        Verdict::Indeterminate
    } else if excised.winding == 0 && origin_relative < origin_tol && small_circle.winding == 1 {
        Verdict::Pass
    } else {
        if excised.winding != 0 {
            notes.push(format!("{} zero(s) in the excised right half-disk", excised.winding));
        }
        if small_circle.winding != 1 {
            notes.push(format!("winding {} around the origin (expected a simple zero)", small_circle.winding));
        }
        if origin_relative >= origin_tol {
            notes.push(format!("|D(0)| relative {origin_relative:.3e} is not small"));
        }
        Verdict::Fail
    };
    Ok(EvansContourResult {
        big_radius: big,
        small_radius: rho,
        big_radius_heuristic: heuristic,
        excised,
        small_circle,
        origin_value: (d0.re, d0.im),
        origin_relative,
        origin_tol,
        verdict,
        notes,
    })
}

/// Verifies the root condition for a profile's Evans function. `big` defaults
/// to `10 max |a|^2`.
pub fn verify_condition_d(evans: &Evans, big: Option<f64>, rho: f64, settings: &WindingSettings) -> Result<EvansContourResult> {
    let heuristic = default_big_radius(evans);
    let r = big.unwrap_or(heuristic);
    if !(rho > 0.0) || !(r > rho) {
        return Err(Error::InvalidInput("contour needs 0 < rho < R".into()));
    }
    condition_d_verdict(evans, r, rho, heuristic, settings)
}
