use nalgebra::DVector;
use shocklab::analysis::{lp_norm, Norm};
use shocklab::models::{burgers, cubic, psystem, quadratic};
use shocklab::profile::{solve_profile, ProfileSettings, ShiftConvention, ShockProfile};
use shocklab::sim::{run_simulation, SimulationConfig};
use shocklab::Error;

fn burgers_profile() -> (shocklab::models::FluxViscositySystem, ShockProfile) {
    let m = burgers(1.0).unwrap();
    let s = ProfileSettings { halfwidth: 20.0, h: 0.01, ..Default::default() };
    let p = solve_profile(&m, &DVector::from_vec(vec![1.0]), &DVector::from_vec(vec![-1.0]), &s).unwrap();
    (m, p)
}

fn small(t_final: f64, eps: f64) -> SimulationConfig {
    let mut c = SimulationConfig { halfwidth: 40.0, h: 0.05, t_final, auto_domain: false, ..Default::default() };
    c.perturbation.amplitude = eps;
    c
}

#[test]
fn unperturbed_profile_is_stationary() {
    let (m, p) = burgers_profile();
    let run = run_simulation(&m, &p, &small(100.0, 0.0)).unwrap();
    assert!(run.final_deviation < 1e-6);
    assert!(run.norms.iter().all(|n| n.linf < 1e-6));
}

#[test]
fn mass_ledger_balances() {
    let (m, p) = burgers_profile();
    let mut c = small(20.0, 1e-2);
    c.perturbation.center = -2.0;
    let run = run_simulation(&m, &p, &c).unwrap();
    // independent initial mass from the stored datum
    let m0: f64 = run.h * run.w0.iter().sum::<f64>();
    assert!((m0 - run.ledger.mass_initial[0]).abs() < 1e-15);
    assert!((m0 - 1e-2 * std::f64::consts::PI.sqrt()).abs() < 1e-10);
    assert!(run.ledger.residual_per_time < 1e-8, "{:?}", run.ledger);
}

#[test]
fn perturbation_decays_and_phase_absorbs_mass() {
    let (m, p) = burgers_profile();
    let run = run_simulation(&m, &p, &small(30.0, 1e-2)).unwrap();
    let l2: Vec<f64> = run.norms.iter().map(|n| n.l2).collect();
    assert!(l2[30] < 1e-2 * l2[0]);
    // mass m shifts a profile of jump -2 by m / 2
    let mass = 1e-2 * std::f64::consts::PI.sqrt();
    assert!((run.delta_lsq[30] - 0.5 * mass).abs() < 1e-4 * mass, "{}", run.delta_lsq[30]);
}

#[test]
fn refinement_and_domain_insensitivity() {
    let (m, p) = burgers_profile();
    let base = run_simulation(&m, &p, &small(5.0, 1e-2)).unwrap();
    let fine = run_simulation(&m, &p, &SimulationConfig { h: 0.025, ..small(5.0, 1e-2) }).unwrap();
    let (a, b) = (base.norms[5].l2, fine.norms[5].l2);
    assert!((a - b).abs() < 0.05 * b, "{a} vs {b}");
    let wide = run_simulation(&m, &p, &SimulationConfig { halfwidth: 80.0, ..small(5.0, 1e-2) }).unwrap();
    for k in 0..=5 {
        let (a, b) = (base.norms[k].l2, wide.norms[k].l2);
        assert!((a - b).abs() < 0.01 * b);
    }
}

#[test]
fn oversized_time_step_is_rejected() {
    let (m, p) = burgers_profile();
    let c = SimulationConfig { dt: Some(0.5), ..small(2.0, 1e-2) };
    assert!(matches!(run_simulation(&m, &p, &c), Err(Error::Cfl { .. })));
}

#[test]
fn oversized_perturbation_is_rejected() {
    let (m, p) = burgers_profile();
    assert!(matches!(run_simulation(&m, &p, &small(2.0, 0.5)), Err(Error::InvalidInput(_))));
}

#[test]
fn overcompressive_input_is_unsupported() {
    // |U|^2 U at frame speed 0.84 between (1, 0) and (-0.2, 0): all four
    // characteristics enter the shock
    let s = 0.84;
    let m = cubic([[1.0, 0.0], [0.0, 1.0]]).unwrap().with_frame_speed(s);
    let h = 0.1;
    let x: Vec<f64> = (0..=200).map(|i| -10.0 + i as f64 * h).collect();
    let u: Vec<f64> = x.iter().flat_map(|x| [0.4 - 0.6 * x.tanh(), 0.0]).collect();
    let fake = ShockProfile {
        n: 2,
        h,
        halfwidth: 10.0,
        x,
        du: vec![0.0; u.len()],
        w: u.clone(),
        dw: vec![0.0; u.len()],
        u,
        u_minus: DVector::from_vec(vec![1.0, 0.0]),
        u_plus: DVector::from_vec(vec![-0.2, 0.0]),
        residual: 0.0,
        endstate_error: 0.0,
        shift: ShiftConvention { component: 0, value: 0.4 },
    };
    let err = run_simulation(&m, &fake, &small(1.0, 1e-2)).unwrap_err();
    assert!(matches!(err, Error::Unsupported(_)), "{err}");
    assert!(err.to_string().contains("overcompressive"));
}

#[test]
fn undercompressive_outgoing_mode_leaves_quietly() {
    let m = quadratic(1.0).unwrap();
    let s = ProfileSettings { halfwidth: 20.0, h: 0.01, ..Default::default() };
    let p = solve_profile(&m, &DVector::from_vec(vec![-0.5, 0.0]), &DVector::from_vec(vec![0.5, 0.0]), &s).unwrap();
    let mut c = SimulationConfig { h: 0.05, t_final: 20.0, halfwidth: 10.0, ..Default::default() };
    c.perturbation.direction = Some(vec![0.0, 1.0]);
    let run = run_simulation(&m, &p, &c).unwrap();
    // the domain was enlarged past the outgoing front
    assert!(run.halfwidth >= 20.0 + 8.0 * 20f64.sqrt());
    assert!(run.boundary_activity.iter().all(|a| *a < 1e-8));
    assert!(run.ledger.residual_per_time < 1e-8);
    // an outgoing wave keeps its mass
    let m_final = lp_norm(run.w.last().unwrap(), 2, run.h, Norm::L1);
    assert!(m_final > 0.5 * lp_norm(&run.w0, 2, run.h, Norm::L1));
}

#[test]
fn psystem_stays_admissible() {
    let (gamma, kappa) = (1.4, 1.0);
    let (vm, vp) = (1.0, 2.0);
    let pr = |v: f64| kappa * f64::powf(v, -gamma);
    let s = ((pr(vp) - pr(vm)) / (vm - vp)).sqrt();
    let up = -s * (vp - vm);
    let m = psystem(gamma, kappa, 1.0).unwrap().with_frame_speed(s);
    let set = ProfileSettings { halfwidth: 20.0, h: 0.01, ..Default::default() };
    let p = solve_profile(&m, &DVector::from_vec(vec![vm, 0.0]), &DVector::from_vec(vec![vp, up]), &set).unwrap();
    let run = run_simulation(&m, &p, &small(10.0, 1e-2)).unwrap();
    assert!(run.norms.iter().all(|n| n.l2.is_finite()));
    assert!(run.ledger.residual_per_time < 1e-8);
}
