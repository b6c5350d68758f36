use std::f64::consts::PI;

use nalgebra::DVector;
use proptest::prelude::*;
use shocklab::analysis::{
    damping_monitor, fit_decay_exponent, lp_norm, phase_extract_kernel, phase_extract_lsq, vertical_increment,
    vertical_integral, zeta_from_series, DampingSettings, GridProfile, Norm, PhaseSettings, SnapshotNorms,
};
use shocklab::kernels::{KernelE, LField, LMode};
use shocklab::models::burgers;
use shocklab::profile::{characteristic_data, solve_profile, ProfileSettings, ShockProfile};
use shocklab::quad::{integrate, QuadTol};
use shocklab::sim::{ConservationLedger, SimulationRun};

fn burgers_setup() -> (shocklab::models::FluxViscositySystem, ShockProfile) {
    let m = burgers(1.0).unwrap();
    let s = ProfileSettings { halfwidth: 20.0, h: 0.01, ..Default::default() };
    let p = solve_profile(&m, &DVector::from_vec(vec![1.0]), &DVector::from_vec(vec![-1.0]), &s).unwrap();
    (m, p)
}

/// `-tanh(x / 2)` on `[-X, X]`, the exact Burgers profile.
fn tanh_profile(x_half: f64, h: f64) -> GridProfile {
    let len = (2.0 * x_half / h).round() as usize + 1;
    GridProfile { n: 1, x0: -x_half, h, w: (0..len).map(|i| -(0.5 * (-x_half + i as f64 * h)).tanh()).collect() }
}

/// A run whose only nonzero datum is `w0`.
fn quiet_run(profile: &GridProfile, w0: Vec<f64>, t_final: usize) -> SimulationRun {
    let len = profile.len();
    SimulationRun {
        model: "burgers".into(),
        n: 1,
        halfwidth: -profile.x0,
        h: profile.h,
        dt: 0.01,
        steps: 0,
        epsilon: 0.0,
        times: (0..=t_final).map(|k| k as f64).collect(),
        profile: profile.w.clone(),
        w0,
        w: vec![vec![0.0; len]; t_final + 1],
        delta_lsq: vec![0.0; t_final + 1],
        norms: vec![SnapshotNorms::default(); t_final + 1],
        probes: vec![0.0],
        stations: vec![vec![0.0]; t_final + 1],
        boundary_activity: vec![0.0; t_final + 1],
        ledger: ConservationLedger::default(),
        final_deviation: 0.0,
        hs_order: 4,
    }
}

#[test]
fn constant_field_norms() {
    let (x, h, c) = (10.0f64, 0.05, 0.7);
    let len = (2.0 * x / h).round() as usize + 1;
    let w = vec![c; len];
    assert!((lp_norm(&w, 1, h, Norm::L1) - 2.0 * x * c).abs() < 1e-12);
    assert!((lp_norm(&w, 1, h, Norm::Inf) - c).abs() < 1e-15);
}

#[test]
fn gaussian_l2_norm() {
    let h = 0.01;
    let w: Vec<f64> = (0..=2000).map(|i| (-(-10.0 + i as f64 * h).powi(2)).exp()).collect();
    let exact = (PI / 2.0).powf(0.25);
    assert!((lp_norm(&w, 1, h, Norm::L2) - exact).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norms_are_even(vals in prop::collection::vec(-5.0f64..5.0, 40..120)) {
        let neg: Vec<f64> = vals.iter().map(|v| -v).collect();
        let (a, b) = (SnapshotNorms::compute(&vals, 2, 0.1, 4), SnapshotNorms::compute(&neg, 2, 0.1, 4));
        prop_assert_eq!(a.l1, b.l1);
        prop_assert_eq!(a.l2, b.l2);
        prop_assert_eq!(a.linf, b.linf);
        prop_assert_eq!(a.hs, b.hs);
    }

    #[test]
    fn fit_is_scale_invariant(scale in 1e-6f64..1e6, p in -2.0f64..-0.05) {
        let times: Vec<f64> = (0..=200).map(|k| k as f64).collect();
        let v: Vec<f64> = times.iter().map(|t| (1.0 + t).powf(p) * (1.0 + 0.2 * (0.3 * t).sin())).collect();
        let vs: Vec<f64> = v.iter().map(|x| x * scale).collect();
        let a = fit_decay_exponent(&times, &v, (25.0, 200.0)).unwrap();
        let b = fit_decay_exponent(&times, &vs, (25.0, 200.0)).unwrap();
        prop_assert!((a.exponent - b.exponent).abs() < 1e-9);
    }

    #[test]
    fn vertical_is_additive(vals in prop::collection::vec(0.0f64..1.0, 10..60), cut in 1usize..9) {
        let times: Vec<f64> = (0..vals.len()).map(|k| 0.5 * k as f64).collect();
        let v = vertical_integral(&times, &vals);
        let whole = v[vals.len() - 1];
        let parts = v[cut] + vertical_increment(&times, &vals, cut, vals.len() - 1);
        prop_assert!((whole - parts).abs() <= 1e-14 * whole.max(1.0));
        prop_assert!(v.windows(2).all(|p| p[1] >= p[0]));
    }
}

#[test]
fn lsq_recovers_a_translation() {
    let gp = tanh_profile(30.0, 0.05);
    let shifted: Vec<f64> = (0..gp.len()).map(|i| -(0.5 * (gp.x(i) - 0.3)).tanh()).collect();
    let d = phase_extract_lsq(&shifted, &gp, 0.0).unwrap();
    assert!((d - 0.3).abs() < 1e-4, "delta = {d}");
    let d0 = phase_extract_lsq(&gp.w, &gp, 0.0).unwrap();
    assert!(d0.abs() < 1e-6);
}

#[test]
fn lsq_is_second_order_for_odd_perturbations() {
    let gp = tanh_profile(30.0, 0.05);
    for eps in [1e-3, 2e-3] {
        // odd about 0, hence orthogonal to the even profile derivative
        let w: Vec<f64> = (0..gp.len()).map(|i| gp.w[i] + eps * gp.x(i) * (-gp.x(i).powi(2)).exp()).collect();
        let d = phase_extract_lsq(&w, &gp, 0.0).unwrap();
        assert!(d.abs() <= 10.0 * eps * eps, "eps {eps}: delta {d}");
    }
}

#[test]
fn lsq_rejects_a_lost_shock() {
    let gp = tanh_profile(30.0, 0.05);
    let far: Vec<f64> = (0..gp.len()).map(|i| -(0.5 * (gp.x(i) - 15.0)).tanh()).collect();
    assert!(phase_extract_lsq(&far, &gp, 0.0).is_err());
}

#[test]
fn linear_phase_matches_direct_quadrature() {
    let (model, profile) = burgers_setup();
    let cd = characteristic_data(&model, &profile).unwrap();
    let kernel = KernelE::from_characteristics(&cd, &profile, LMode::Auto).unwrap();
    let l = match &kernel.minus[0].l {
        LField::Constant(v) => v[0],
        LField::Grid { l, .. } => l[0],
    };
    let (a, beta) = (kernel.minus[0].a, kernel.minus[0].beta);
    let gp = tanh_profile(60.0, 0.05);
    let y0 = -10.0;
    let bump = |y: f64| (-(y - y0).powi(2)).exp() / PI.sqrt();
    let w0: Vec<f64> = (0..gp.len()).map(|i| bump(gp.x(i))).collect();
    let run = quiet_run(&gp, w0, 30);
    let series = phase_extract_kernel(&model, &run, &kernel, &PhaseSettings::default()).unwrap();
    let errfn = |z: f64| libm::erfc(-z) / (4.0 * PI.sqrt());
    for k in [0usize, 1, 5, 12, 30] {
        let t = k as f64;
        let oracle = if t < 1.0 {
            0.0
        } else {
            let s = (4.0 * beta * t).sqrt();
            let f = |y: f64| (errfn((y + a * t) / s) - errfn((y - a * t) / s)) * l * bump(y);
            -integrate(f, y0 - 12.0, 0.0, QuadTol { abs: 1e-13, rel: 1e-12, max_intervals: 4000 }).unwrap()
        };
        assert!((series.delta_kernel[k] - oracle).abs() < 1e-8, "t = {t}: {} vs {oracle}", series.delta_kernel[k]);
    }
    assert_eq!(series.delta_kernel[0], 0.0);
}

#[test]
fn zero_run_has_zero_phase_and_zeta() {
    let (model, profile) = burgers_setup();
    let cd = characteristic_data(&model, &profile).unwrap();
    let kernel = KernelE::from_characteristics(&cd, &profile, LMode::Auto).unwrap();
    let gp = tanh_profile(30.0, 0.05);
    let run = quiet_run(&gp, vec![0.0; gp.len()], 20);
    let ph = phase_extract_kernel(&model, &run, &kernel, &PhaseSettings::default()).unwrap();
    assert!(ph.delta_kernel.iter().chain(&ph.deltadot_kernel).all(|v| *v == 0.0));
    let z = shocklab::analysis::zeta_functional(&run, &ph);
    assert!(z.zeta.iter().all(|v| *v == 0.0));
    assert!(ph.iterations.iter().all(|i| *i <= 2));
}

#[test]
fn zeta_weight_cancels_l2_decay() {
    let times: Vec<f64> = (0..=100).map(|k| 0.5 * k as f64).collect();
    let norms: Vec<SnapshotNorms> =
        times.iter().map(|t| SnapshotNorms { l2: (1.0 + t).powf(-0.25), ..Default::default() }).collect();
    let zeros = vec![0.0; times.len()];
    let z = zeta_from_series(&times, &norms, &zeros, &zeros, &zeros);
    assert!(z.iter().all(|v| (v - 1.0).abs() < 1e-14));
}

#[test]
fn vertical_integral_limits() {
    // log-spaced times up to 1e12
    let times: Vec<f64> = std::iter::once(0.0).chain((0..=24000).map(|k| 10f64.powf(-3.0 + 15.0 * k as f64 / 24000.0))).collect();
    let fast: Vec<f64> = times.iter().map(|s| (1.0 + s).powf(-0.75)).collect();
    let v = vertical_integral(&times, &fast);
    let t_end = *times.last().unwrap();
    let exact = 4.0 * (1.0 - (1.0 + t_end).powf(-0.25));
    assert!((v.last().unwrap() - exact).abs() < 1e-4 * exact);
    assert!((v.last().unwrap() - 4.0).abs() < 1e-2);

    let slow: Vec<f64> = times.iter().map(|s| (1.0 + s).powf(-0.5)).collect();
    let v = vertical_integral(&times, &slow);
    for (k, t) in times.iter().enumerate().step_by(4000) {
        let exact = (1.0 + t).ln();
        assert!((v[k] - exact).abs() < 1e-4 * exact.max(1e-3), "t {t}");
    }
}

#[test]
fn exact_power_law_is_recovered() {
    let times: Vec<f64> = (0..=200).map(|k| k as f64).collect();
    let v: Vec<f64> = times.iter().map(|t| 3.0 * (1.0 + t).powf(-0.25)).collect();
    let f = fit_decay_exponent(&times, &v, (25.0, 200.0)).unwrap();
    assert!((f.exponent + 0.25).abs() < 1e-10);
    assert!((f.intercept - 3f64.ln()).abs() < 1e-9);
    let wobble: Vec<f64> = times.iter().map(|t| (1.0 + t).powf(-0.5) * (1.0 + 0.1 * (1.0 + t).ln().sin())).collect();
    let f = fit_decay_exponent(&times, &wobble, (25.0, 200.0)).unwrap();
    assert!((f.exponent + 0.5).abs() < 0.05);
    let mut bad = v.clone();
    bad[100] = 0.0;
    assert!(fit_decay_exponent(&times, &bad, (25.0, 200.0)).is_err());
}

#[test]
fn damping_monitor_verdicts() {
    let times: Vec<f64> = (0..=100).map(|k| k as f64).collect();
    let zeros = vec![0.0; times.len()];
    let r = damping_monitor(&times, &zeros, &zeros, &DampingSettings::default()).unwrap();
    assert!(r.pass && r.constant == 1.0);
    let grow: Vec<f64> = times.iter().map(|t| (t / 10.0).exp()).collect();
    let r = damping_monitor(&times, &grow, &zeros, &DampingSettings::default()).unwrap();
    assert!(!r.pass);
    let t = r.violation.expect("violating time");
    assert!(t > 50.0 && t <= 100.0);
    // decaying energy bounded by its own drive
    let hs2: Vec<f64> = times.iter().map(|t| (1.0 + t).powf(-0.5)).collect();
    let r = damping_monitor(&times, &hs2, &hs2, &DampingSettings::default()).unwrap();
    assert!(r.pass && r.constant.is_finite());
}
