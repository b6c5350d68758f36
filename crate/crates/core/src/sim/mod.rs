//! Time integration of perturbed standing shocks on a truncated line and the
//! recorded history used by the analysis.

mod scheme;

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::norms::{hs_norm, lp_norm, Norm, SnapshotNorms};
use crate::analysis::phase::{phase_extract_lsq, shift_field, GridProfile};
use crate::error::{Error, Result};
use crate::linalg::lagrange6;
use crate::models::FluxViscositySystem;
use crate::profile::{endstate_characteristics, ShockProfile, ShockType};

pub use scheme::Boundary;
use scheme::{spectral_radius, Scheme};

/// Shape of the initial perturbation `u0` (in `U` variables).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    /// `eps exp(-((x - y0) / sigma)^2) d`.
    Gaussian,
    /// `eps (1 - r^2)^5 d` for `r = |x - y0| / sigma < 1`.
    CompactBump,
    /// `U(x - eps) - U(x)`: the profile translated by `eps`.
    ShiftedProfile,
    /// A seeded sum of eight Gaussians of random sign near `y0`.
    RandomBump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationSpec {
    pub shape: Shape,
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    /// Direction in state space; the first coordinate axis when absent.
    pub direction: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        PerturbationSpec { shape: Shape::Gaussian, amplitude: 1e-2, center: 5.0, width: 1.0, direction: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    /// Requested half-width `X`; enlarged to keep the boundaries quiet when
    /// `auto_domain` is set.
    pub halfwidth: f64,
    pub h: f64,
    /// Fixed time step; chosen from `cfl` when absent.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub t_final: f64,
    pub perturbation: PerturbationSpec,
    pub boundary: Boundary,
    pub snapshot_interval: f64,
    /// Upper bound on `|w0|_{L1} + |w0|_{H4}`.
    pub smallness: f64,
    pub probes: Vec<f64>,
    pub auto_domain: bool,
    /// Coefficient of the fourth-order dissipation.
    pub dissipation: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            halfwidth: 200.0,
            h: 0.05,
            dt: None,
            cfl: 0.4,
            t_final: 200.0,
            perturbation: PerturbationSpec::default(),
            boundary: Boundary::Characteristic,
            snapshot_interval: 1.0,
            smallness: 1.0,
            probes: vec![-10.0, -2.0, 0.0, 2.0, 10.0],
            auto_domain: true,
            dissipation: 1.0 / 32.0,
        }
    }
}

/// Discrete mass balance `M(T) - M(0) = boundary inflow`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ConservationLedger {
    pub mass_initial: Vec<f64>,
    pub mass_final: Vec<f64>,
    pub boundary_inflow: Vec<f64>,
    /// `|M(T) - M(0) - inflow|`.
    pub residual: f64,
    pub residual_per_time: f64,
}

/// History of one run, sampled at the snapshot times.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationRun {
    pub model: String,
    pub n: usize,
    pub halfwidth: f64,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub epsilon: f64,
    pub times: Vec<f64>,
    /// `W̄` on the simulation grid.
    pub profile: Vec<f64>,
    /// Uncentered initial perturbation `W~(x, 0) - W̄(x)`.
    pub w0: Vec<f64>,
    /// Centered perturbation `W~(x + delta, t) - W̄(x)` at each snapshot,
    /// with `delta = 0` at `t = 0`.
    pub w: Vec<Vec<f64>>,
    /// Least-squares phase at each snapshot.
    pub delta_lsq: Vec<f64>,
    pub norms: Vec<SnapshotNorms>,
    pub probes: Vec<f64>,
    /// `w(x*, t_k)` per snapshot, probe-major, `n` components each.
    pub stations: Vec<Vec<f64>>,
    /// Largest `|w|` over the two boundary nodes at each snapshot.
    pub boundary_activity: Vec<f64>,
    pub ledger: ConservationLedger,
    /// `max |W~(x, t) - W̄(x)|` over the grid at the final time, uncentered.
    pub final_deviation: f64,
    pub hs_order: usize,
}

/// Derivative order of the Sobolev norm that is tracked.
pub const HS_ORDER: usize = 4;

impl SimulationRun {
    pub fn len(&self) -> usize {
        self.profile.len() / self.n
    }
    pub fn is_empty(&self) -> bool {
        self.profile.is_empty()
    }
    pub fn x0(&self) -> f64 {
        -self.halfwidth
    }
    pub fn x(&self, i: usize) -> f64 {
        -self.halfwidth + i as f64 * self.h
    }
    pub fn grid_profile(&self) -> GridProfile {
        GridProfile { n: self.n, x0: self.x0(), h: self.h, w: self.profile.clone() }
    }

    /// The history restricted to `t <= t_end`.
    pub fn truncated(&self, t_end: f64) -> SimulationRun {
        let k = self.times.iter().take_while(|t| **t <= t_end + 1e-9).count().max(1);
        let mut r = self.clone();
        r.times.truncate(k);
        r.w.truncate(k);
        r.delta_lsq.truncate(k);
        r.norms.truncate(k);
        r.stations.truncate(k);
        r.boundary_activity.truncate(k);
        r
    }

    /// `|w(x*_j, t_k)|` for probe `j`.
    pub fn station_abs(&self, j: usize) -> Vec<f64> {
        let n = self.n;
        self.stations.iter().map(|s| s[j * n..(j + 1) * n].iter().map(|v| v * v).sum::<f64>().sqrt()).collect()
    }
}

fn unit_direction(spec: &PerturbationSpec, n: usize) -> Result<Vec<f64>> {
    let d = match &spec.direction {
        None => {
            let mut d = vec![0.0; n];
            d[0] = 1.0;
            d
        }
        Some(d) => d.clone(),
    };
    if d.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: d.len() });
    }
    let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidInput("perturbation direction must be a nonzero finite vector".into()));
    }
    Ok(d.iter().map(|v| v / norm).collect())
}

/// Initial perturbation `u0` in `U` variables on the nodes `xs`.
pub fn initial_perturbation(profile: &ShockProfile, spec: &PerturbationSpec, xs: &[f64]) -> Result<Vec<f64>> {
    let n = profile.n;
    let eps = spec.amplitude;
    let mut out = vec![0.0; xs.len() * n];
    if eps == 0.0 {
        return Ok(out);
    }
    if !(spec.width > 0.0) && spec.shape != Shape::ShiftedProfile {
        return Err(Error::InvalidInput("perturbation width must be positive".into()));
    }
    let dir = unit_direction(spec, n)?;
    let (y0, sigma) = (spec.center, spec.width);
    let bumps: Vec<(f64, f64, f64)> = match spec.shape {
        Shape::RandomBump => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            (0..8)
                .map(|_| {
                    let c = y0 + sigma * rng.gen_range(-3.0..3.0);
                    let wdt = sigma * rng.gen_range(0.5..1.5);
                    let a = rng.gen_range(-1.0..1.0);
                    (c, wdt, a)
                })
                .collect()
        }
        _ => Vec::new(),
    };
    let mut ub = vec![0.0; n];
    let mut us = vec![0.0; n];
    for (i, &x) in xs.iter().enumerate() {
        let o = &mut out[i * n..(i + 1) * n];
        match spec.shape {
            Shape::Gaussian => {
                let g = (-((x - y0) / sigma).powi(2)).exp();
                o.iter_mut().zip(&dir).for_each(|(v, d)| *v = eps * g * d);
            }
            Shape::CompactBump => {
                let r2 = ((x - y0) / sigma).powi(2);
                let g = if r2 < 1.0 { (1.0 - r2).powi(5) } else { 0.0 };
                o.iter_mut().zip(&dir).for_each(|(v, d)| *v = eps * g * d);
            }
            Shape::RandomBump => {
                let g: f64 = bumps.iter().map(|(c, wd, a)| a * (-((x - c) / wd).powi(2)).exp()).sum();
                o.iter_mut().zip(&dir).for_each(|(v, d)| *v = eps * g * d);
            }
            Shape::ShiftedProfile => {
                u_interp(profile, x, &mut ub);
                u_interp(profile, x - eps, &mut us);
                for c in 0..n {
                    o[c] = us[c] - ub[c];
                }
            }
        }
    }
    Ok(out)
}

fn u_interp(profile: &ShockProfile, x: f64, out: &mut [f64]) {
    let (x0, xn) = (profile.x[0], profile.x[profile.len() - 1]);
    for k in 0..profile.n {
        out[k] = if x <= x0 {
            profile.u_minus[k]
        } else if x >= xn {
            profile.u_plus[k]
        } else {
            lagrange6(&profile.component(k), x0, profile.h, x)
        };
    }
}

/// Largest outgoing characteristic speed and diffusion rate at the two
/// endstates, after refusing overcompressive shocks.
fn endstate_scales(model: &FluxViscositySystem, profile: &ShockProfile) -> Result<(f64, f64)> {
    let ends = endstate_characteristics(model, &profile.u_minus, &profile.u_plus)?;
    if ends.shock_type == ShockType::Overcompressive {
        return Err(Error::Unsupported(format!(
            "overcompressive unsupported (i+ = {} >= i- + 2 = {})",
            ends.i_plus,
            ends.i_minus + 2
        )));
    }
    let out_l = ends.a_minus.iter().filter(|a| **a < 0.0).fold(0.0f64, |m, a| m.max(a.abs()));
    let out_r = ends.a_plus.iter().filter(|a| **a > 0.0).fold(0.0f64, |m, a| m.max(a.abs()));
    let mut beta = 0.0f64;
    for u in [&profile.u_minus, &profile.u_plus] {
        let b = model.visc(u);
        beta = beta.max(b.complex_eigenvalues().iter().fold(0.0, |m, z| m.max(z.norm())));
    }
    beta = beta.max(ends.beta_minus.iter().chain(&ends.beta_plus).fold(0.0, |m, b| m.max(*b)));
    Ok((out_l.max(out_r), beta.max(1.0)))
}

/// Half-width that keeps outgoing signals and their diffusive tails away
/// from the boundaries up to `t_final`, rounded to a multiple of `h`.
pub fn required_halfwidth(config: &SimulationConfig, out_speed: f64, beta: f64, layer: f64) -> f64 {
    let p = &config.perturbation;
    let support = match p.shape {
        Shape::ShiftedProfile => 5.0 * layer,
        Shape::RandomBump => p.center.abs() + 5.0 * p.width,
        _ => p.center.abs() + 5.0 * p.width,
    };
    let x = out_speed * config.t_final + 8.0 * (beta * config.t_final).sqrt() + support;
    (x / config.h).ceil() * config.h
}

/// Integrates the perturbed profile `W̄ + w` to `t_final`.
pub fn run_simulation(model: &FluxViscositySystem, profile: &ShockProfile, config: &SimulationConfig) -> Result<SimulationRun> {
    let n = model.n();
    if profile.n != n {
        return Err(Error::DimensionMismatch { expected: n, got: profile.n });
    }
    if !(config.h > 0.0 && config.t_final > 0.0 && config.snapshot_interval > 0.0 && config.cfl > 0.0) {
        return Err(Error::InvalidInput("h, t_final, snapshot_interval and cfl must be positive".into()));
    }
    let (out_speed, beta) = endstate_scales(model, profile)?;
    let layer = {
        let gp = GridProfile { n, x0: profile.x[0], h: profile.h, w: profile.w.clone() };
        gp.layer_width()
    };
    let mut halfwidth = (config.halfwidth / config.h).round() * config.h;
    if config.auto_domain {
        halfwidth = halfwidth.max(required_halfwidth(config, out_speed, beta, layer));
    }
    let h = config.h;
    let len = (2.0 * halfwidth / h).round() as usize + 1;
    let xs: Vec<f64> = (0..len).map(|i| -halfwidth + i as f64 * h).collect();

    let mut wbar = vec![0.0; len * n];
    for (i, &x) in xs.iter().enumerate() {
        profile.w_interp(x, &mut wbar[i * n..(i + 1) * n]);
    }
    let u0 = initial_perturbation(profile, &config.perturbation, &xs)?;
    let mut w = vec![0.0; len * n];
    {
        let mut ubar = vec![0.0; n];
        let mut ut = vec![0.0; n];
        let mut wt = vec![0.0; n];
        for i in 0..len {
            model.u_from_w(&wbar[i * n..(i + 1) * n], &mut ubar)?;
            for c in 0..n {
                ut[c] = ubar[c] + u0[i * n + c];
            }
            if !model.is_admissible(&ut) {
                return Err(Error::InvalidInput(format!("perturbed state at x = {:.3} is not admissible", xs[i])));
            }
            model.f0_into(&ut, &mut wt);
            for c in 0..n {
                w[i * n + c] = wt[c] - wbar[i * n + c];
            }
        }
    }
    let size = lp_norm(&w, n, h, Norm::L1) + hs_norm(&w, n, h, HS_ORDER);
    if size > config.smallness {
        return Err(Error::InvalidInput(format!(
            "|w0|_L1 + |w0|_H4 = {size:.4e} exceeds the smallness threshold {:.4e}",
            config.smallness
        )));
    }

    let mut rho = 0.0f64;
    for i in 0..len {
        let wi: Vec<f64> = (0..n).map(|c| wbar[i * n + c] + w[i * n + c]).collect();
        rho = rho.max(spectral_radius(model, &wi)?);
    }
    let rho = rho.max(1e-3);
    let limit = h / rho;
    let dt_target = match config.dt {
        Some(dt) if dt > limit => return Err(Error::Cfl { dt, limit }),
        Some(dt) if dt > 0.0 => dt,
        Some(_) => return Err(Error::InvalidInput("dt must be positive".into())),
        None => config.cfl.min(1.0) * limit,
    };
    let per_snapshot = (config.snapshot_interval / dt_target - 1e-9).ceil().max(1.0) as usize;
    let dt = config.snapshot_interval / per_snapshot as f64;
    let nsnap = (config.t_final / config.snapshot_interval + 1e-9).floor() as usize;
    info!(
        "simulating {} on [-{halfwidth}, {halfwidth}] with {len} nodes, dt = {dt:.4e}, {} steps",
        model.name(),
        nsnap * per_snapshot
    );

    let gp = GridProfile { n, x0: -halfwidth, h, w: wbar.clone() };
    let mut scheme = Scheme::new(model, wbar.clone(), h, dt, rho, config.dissipation, config.boundary)?;
    let mass = |w: &[f64]| -> Vec<f64> { (0..n).map(|c| h * (0..len).map(|i| w[i * n + c]).sum::<f64>()).collect() };
    let mass_initial = mass(&w);
    let mut inflow = vec![0.0; n];
    let jump = (0..n).map(|c| (wbar[(len - 1) * n + c] - wbar[c]).powi(2)).sum::<f64>().sqrt();
    let blow = 100.0 * jump.max(1.0);

    let mut run = SimulationRun {
        model: model.name().to_string(),
        n,
        halfwidth,
        h,
        dt,
        steps: 0,
        epsilon: config.perturbation.amplitude,
        times: Vec::with_capacity(nsnap + 1),
        profile: wbar.clone(),
        w0: w.clone(),
        w: Vec::with_capacity(nsnap + 1),
        delta_lsq: Vec::with_capacity(nsnap + 1),
        norms: Vec::with_capacity(nsnap + 1),
        probes: config.probes.clone(),
        stations: Vec::with_capacity(nsnap + 1),
        boundary_activity: Vec::with_capacity(nsnap + 1),
        ledger: ConservationLedger::default(),
        final_deviation: 0.0,
        hs_order: HS_ORDER,
    };
    let mut delta_prev = 0.0;
    record(&mut run, &gp, &w, 0.0, &mut delta_prev, true)?;
    let mut ut = vec![0.0; n];
    for k in 1..=nsnap {
        for s in 0..per_snapshot {
            let flux = scheme.step(&mut w)?;
            for c in 0..n {
                inflow[c] += flux.inflow[c];
            }
            let t = ((k - 1) * per_snapshot + s + 1) as f64 * dt;
            let mut wmax = 0.0f64;
            for v in &w {
                if !v.is_finite() {
                    return Err(Error::BlowUp { t, reason: "non-finite state".into() });
                }
                wmax = wmax.max(v.abs());
            }
            if wmax > blow {
                return Err(Error::BlowUp { t, reason: format!("|w| = {wmax:.3e} exceeds {blow:.3e}") });
            }
            for i in 0..len {
                let wi: Vec<f64> = (0..n).map(|c| wbar[i * n + c] + w[i * n + c]).collect();
                model.u_from_w(&wi, &mut ut)?;
                if !model.is_admissible(&ut) {
                    return Err(Error::BlowUp { t, reason: format!("inadmissible state at x = {:.3}", xs[i]) });
                }
            }
        }
        run.steps += per_snapshot;
        record(&mut run, &gp, &w, k as f64 * config.snapshot_interval, &mut delta_prev, false)?;
        debug!("t = {:.1}: |w|_L2 = {:.4e}", k as f64 * config.snapshot_interval, run.norms.last().unwrap().l2);
    }
    let mass_final = mass(&w);
    let residual = (0..n).map(|c| (mass_final[c] - mass_initial[c] - inflow[c]).powi(2)).sum::<f64>().sqrt();
    let t_end = nsnap as f64 * config.snapshot_interval;
    run.ledger = ConservationLedger {
        mass_initial,
        mass_final,
        boundary_inflow: inflow,
        residual,
        residual_per_time: if t_end > 0.0 { residual / t_end } else { residual },
    };
    run.final_deviation = w.iter().fold(0.0, |m, v| m.max(v.abs()));
    Ok(run)
}

/// Appends the snapshot of the centered perturbation `w`; the initial
/// snapshot is stored uncentered.
fn record(run: &mut SimulationRun, gp: &GridProfile, w: &[f64], t: f64, delta_prev: &mut f64, initial: bool) -> Result<()> {
    let n = run.n;
    let len = gp.len();
    let full: Vec<f64> = w.iter().zip(&gp.w).map(|(a, b)| a + b).collect();
    let delta = phase_extract_lsq(&full, gp, *delta_prev)?;
    *delta_prev = delta;
    let centered: Vec<f64> = if initial {
        w.to_vec()
    } else {
        shift_field(&full, n, gp.h, delta).iter().zip(&gp.w).map(|(a, b)| a - b).collect()
    };
    let mut st = Vec::with_capacity(run.probes.len() * n);
    for &xp in &run.probes {
        for c in 0..n {
            let comp: Vec<f64> = (0..len).map(|i| centered[i * n + c]).collect();
            st.push(lagrange6(&comp, gp.x0, gp.h, xp));
        }
    }
    let edge = (0..n)
        .map(|c| centered[c].abs().max(centered[(len - 1) * n + c].abs()))
        .fold(0.0, f64::max);
    run.norms.push(SnapshotNorms::compute(&centered, n, gp.h, HS_ORDER));
    run.times.push(t);
    run.delta_lsq.push(delta);
    run.stations.push(st);
    run.boundary_activity.push(edge);
    run.w.push(centered);
    Ok(())
}
