use nalgebra::DVector;
use proptest::prelude::*;
use shocklab::kernels::{
    aux1, errfn, hyperbolic_transport_data, test_integral, theta, verify_aux_bounds, verify_ebounds, AuxSettings,
    EboundsSettings, KernelE, KernelMode, LField, LMode, TestFunction, Theta, ERRFN_INF,
};
use shocklab::models::{burgers, psystem, quadratic};
use shocklab::profile::{characteristic_data, solve_profile, ProfileSettings, ShockProfile};
use shocklab::quad::QuadTol;

fn burgers_profile() -> (shocklab::models::FluxViscositySystem, ShockProfile) {
    let m = burgers(1.0).unwrap();
    let s = ProfileSettings { halfwidth: 20.0, h: 0.01, ..Default::default() };
    let p = solve_profile(&m, &DVector::from_vec(vec![1.0]), &DVector::from_vec(vec![-1.0]), &s).unwrap();
    (m, p)
}

fn shared_profile() -> &'static (shocklab::models::FluxViscositySystem, ShockProfile) {
    static P: std::sync::OnceLock<(shocklab::models::FluxViscositySystem, ShockProfile)> = std::sync::OnceLock::new();
    P.get_or_init(burgers_profile)
}

fn psystem_profile() -> (shocklab::models::FluxViscositySystem, ShockProfile, f64) {
    let (gamma, kappa) = (1.4, 1.0);
    let (vm, vp) = (1.0, 2.0);
    let p = |v: f64| kappa * f64::powf(v, -gamma);
    let s = ((p(vp) - p(vm)) / (vm - vp)).sqrt();
    let up = -s * (vp - vm);
    let model = psystem(gamma, kappa, 1.0).unwrap().with_frame_speed(s);
    let set = ProfileSettings { halfwidth: 20.0, h: 0.01, ..Default::default() };
    let prof = solve_profile(&model, &DVector::from_vec(vec![vm, 0.0]), &DVector::from_vec(vec![vp, up]), &set).unwrap();
    (model, prof, s)
}

fn scalar_kernel(a: f64, beta: f64) -> KernelE {
    KernelE::new(
        1,
        0,
        vec![KernelMode { a, beta, l: LField::Constant(vec![1.0]) }],
        vec![KernelMode { a: -a, beta, l: LField::Constant(vec![1.0]) }],
    )
    .unwrap()
}

#[test]
fn kernel_vanishes_before_unit_time() {
    let k = scalar_kernel(1.0, 1.0);
    for y in [-5.0, -0.3, 0.0, 2.0] {
        let v = k.eval(y, 0.5);
        assert_eq!(v.e, vec![0.0]);
        assert_eq!(v.e_t, vec![0.0]);
        assert_eq!(v.e_y, vec![0.0]);
    }
}

#[test]
fn kernel_origin_limit() {
    let k = scalar_kernel(1.0, 1.0);
    for t in [4.0f64, 100.0, 1e4] {
        let direct = errfn(t.sqrt() / 2.0) - errfn(-t.sqrt() / 2.0);
        assert!((k.eval(0.0, t).e[0] - direct).abs() < 1e-15);
    }
    assert!((k.eval(0.0, 1e4).e[0] - 0.28209).abs() < 1e-5);
    assert!((k.eval(0.0, 1e4).e[0] - ERRFN_INF).abs() < 1e-15);
}

#[test]
fn kernel_tail_difference_matches_direct() {
    let k = scalar_kernel(0.7, 1.3);
    for (y, t) in [(-1.0, 2.0), (-30.0, 10.0), (4.0, 3.0)] {
        let direct = k.eval(y, t).e[0] - k.at_infinity(y).0[0];
        assert!((k.minus_infinity(y, t)[0] - direct).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn kernel_derivatives_match_finite_differences(y in -20.0f64..20.0, t in 1.5f64..40.0) {
        let p = &shared_profile().1;
        let k = KernelE::new(
            2,
            1,
            vec![KernelMode { a: 0.8, beta: 1.2, l: field(p, -1.0) }],
            vec![KernelMode { a: -0.5, beta: 0.7, l: field(p, 1.0) }],
        )
        .unwrap();
        let v = k.eval(y, t);
        let h = 1e-4;
        for c in 0..2 {
            let et = (k.eval(y, t + h).e[c] - k.eval(y, t - h).e[c]) / (2.0 * h);
            let ey = (k.eval(y + h, t).e[c] - k.eval(y - h, t).e[c]) / (2.0 * h);
            let eyt = (k.eval(y, t + h).e_y[c] - k.eval(y, t - h).e_y[c]) / (2.0 * h);
            let scale = 1e-9 + v.e.iter().chain(&v.e_y).fold(0.0f64, |m, x| m.max(x.abs())) * 1e-3;
            prop_assert!((et - v.e_t[c]).abs() <= 1e-5 * v.e_t[c].abs() + scale * 1e-2, "e_t {} vs {}", et, v.e_t[c]);
            prop_assert!((ey - v.e_y[c]).abs() <= 1e-5 * v.e_y[c].abs() + scale * 1e-2, "e_y {} vs {}", ey, v.e_y[c]);
            prop_assert!((eyt - v.e_yt[c]).abs() <= 1e-5 * v.e_yt[c].abs() + scale * 1e-2, "e_yt {} vs {}", eyt, v.e_yt[c]);
        }
    }
}

/// A smooth two-component eigenvector field built from the Burgers profile.
fn field(p: &ShockProfile, sign: f64) -> LField {
    let (x0, h) = (p.x[0], p.h);
    let mut l = Vec::new();
    let mut dl = Vec::new();
    for i in 0..p.len() {
        let (u, du) = (p.u[i], p.du[i]);
        l.extend([1.0 + 0.3 * u * sign, 0.5 * u * u]);
        dl.extend([0.3 * du * sign, u * du]);
    }
    LField::Grid { x0, h, count: p.len(), l, dl }
}

#[test]
fn theta_mass_is_conserved() {
    let (a, b) = (1.5, 0.8);
    for s in [0.1f64, 1.0, 10.0, 100.0] {
        // composite Simpson over a window around the peak
        let w = 12.0 * (b * s).sqrt();
        let n = 4000;
        let hz = 2.0 * w / n as f64;
        let mut sum = 0.0;
        for k in 0..=n {
            let z = a * s - w + k as f64 * hz;
            let c = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            sum += c * theta(z, s, a, b).unwrap();
        }
        let mass = sum * hz / 3.0;
        assert!((mass - (std::f64::consts::PI * b).sqrt()).abs() < 1e-9, "s = {s}: {mass}");
    }
}

#[test]
fn transport_data_is_empty_without_hyperbolic_block() {
    let (m, p) = burgers_profile();
    assert!(hyperbolic_transport_data(&m, &p).unwrap().is_empty());
    let q = quadratic(1.0).unwrap();
    let set = ProfileSettings { halfwidth: 40.0, h: 0.02, ..Default::default() };
    let prof = solve_profile(&q, &DVector::from_vec(vec![-0.5, 0.0]), &DVector::from_vec(vec![0.5, 0.0]), &set).unwrap();
    assert!(hyperbolic_transport_data(&q, &prof).unwrap().is_empty());
}

#[test]
fn psystem_reduced_matrices_match_block_elimination() {
    let (model, prof, s) = psystem_profile();
    let (gamma, kappa, nu) = (1.4, 1.0, 1.0);
    let d = hyperbolic_transport_data(&model, &prof).unwrap();
    assert_eq!(d.nh, 1);
    let len = prof.len();
    for k in 0..10 {
        let i = 50 + k * (len - 100) / 9;
        let (v, du) = (prof.u_at(i)[0], prof.du_at(i)[1]);
        // A = dF - (dB w) U', B = diag(0, nu / v); b1 = 0 so A_* = A11 = -s
        assert!((d.a_star[i] + s).abs() < 1e-12);
        assert!((d.speeds[i] + s).abs() < 1e-12);
        // K = 0, so D_* = A12 b2^{-1} A21 with A12 = -1 and A21 = -c^2 + nu u' / v^2
        let c2 = gamma * kappa * v.powf(-gamma - 1.0);
        let a21 = -c2 + nu * du / (v * v);
        let expected = -1.0 * (v / nu) * a21;
        assert!((d.d_star[i] - expected).abs() < 1e-8 * expected.abs().max(1.0), "x = {}: {} vs {}", prof.x[i], d.d_star[i], expected);
        assert!((d.rates[i] - expected).abs() < 1e-8 * expected.abs().max(1.0));
    }
    assert!(d.static_error < 1e-12);
    assert!(d.dynamic_error < 1e-10);
}

#[test]
fn zeta_starts_at_identity_and_damps_at_endstates() {
    let (model, prof, s) = psystem_profile();
    let d = hyperbolic_transport_data(&model, &prof).unwrap();
    for x in [-15.0, -1.0, 0.0, 3.0, 18.0] {
        assert_eq!(d.zeta(0, x, 0.0).unwrap(), (x, 1.0));
    }
    // far left the characteristic never reaches the profile
    let (gamma, kappa, nu, vm) = (1.4, 1.0, 1.0, 1.0);
    let rate = vm * gamma * kappa * f64::powf(vm, -gamma - 1.0) / nu;
    let t = 5.0;
    let x = -100.0;
    let (foot, z) = d.zeta(0, x, t).unwrap();
    assert!((foot - (x + s * t)).abs() < 1e-9);
    assert!((z - (-rate * t).exp()).abs() < 1e-10);
    assert!(d.zeta(0, 0.0, 2.0).unwrap().1 < 1.0);
}

#[test]
fn ebounds_hold_for_burgers() {
    let (m, p) = burgers_profile();
    let cd = characteristic_data(&m, &p).unwrap();
    let k = KernelE::from_characteristics(&cd, &p, LMode::Auto).unwrap();
    let set = EboundsSettings { ny: 80, nt: 60, tmax: 1e3, ..Default::default() };
    let r = verify_ebounds(&k, &set).unwrap();
    for it in &r.items {
        assert!(it.constant.is_finite() && it.constant > 0.0, "{}: {}", it.name, it.constant);
    }
    assert!(r.gamma_terms_vanish);
}

#[test]
fn undercompressive_ebounds_with_flat_eigenvectors() {
    // along (tanh x, 0) the outgoing left eigenvector is exactly (0, 1)
    let m = quadratic(1.0).unwrap();
    let set = ProfileSettings { halfwidth: 20.0, h: 0.02, ..Default::default() };
    let p = solve_profile(&m, &DVector::from_vec(vec![-0.5, 0.0]), &DVector::from_vec(vec![0.5, 0.0]), &set).unwrap();
    let cd = characteristic_data(&m, &p).unwrap();
    let k = KernelE::from_characteristics(&cd, &p, LMode::Auto).unwrap();
    assert_eq!(k.gamma, 1);
    for mode in k.minus.iter().chain(&k.plus) {
        assert!(matches!(mode.l, LField::Constant(_)));
    }
    let eta = 0.5 * p.tail_rate();
    let r = verify_ebounds(&k, &EboundsSettings { eta, ..Default::default() }).unwrap();
    for it in &r.items {
        assert!(it.pass, "{}: {} vs {}", it.name, it.constant, it.constant_refined);
    }
}

#[test]
fn aux1_matches_closed_form() {
    let (a, b) = (1.0, 1.0);
    let th = Theta::new(a, b).unwrap();
    let f = TestFunction::gaussian();
    let times = [1.0, 10.0, 100.0];
    for x in [-1.0, 1.0] {
        let got = aux1(&th, &f, x, &times, QuadTol::default()).unwrap();
        // Gaussian convolution in closed form, then Simpson in s
        let inner = |s: f64| {
            let c = x - a * s;
            s.powf(-0.5) * (b * s / (b * s + 1.0)).sqrt() * (-c * c / (b * s + 1.0)).exp()
        };
        for (k, &t) in times.iter().enumerate() {
            // substitute s = u^2 to remove the endpoint singularity
            let n = 200_000;
            let hu = t.sqrt() / n as f64;
            let mut sum = 0.0;
            for j in 0..=n {
                let u = j as f64 * hu;
                let g = if u == 0.0 { 0.0 } else { 2.0 * u * inner(u * u) };
                let w = if j == 0 || j == n { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
                sum += w * g;
            }
            let oracle = sum * hu / 3.0;
            assert!((got[k] - oracle).abs() < 1e-6 * oracle, "x={x} t={t}: {} vs {oracle}", got[k]);
        }
    }
}

#[test]
fn zero_source_gives_zero_integrals() {
    let set = AuxSettings { tmax_test: 1e3, tmax_single: 100.0, tmax_nested: 20.0, ..Default::default() };
    let r = verify_aux_bounds(&set, &TestFunction::zero()).unwrap();
    for e in r.entries.iter().filter(|e| e.name != "test") {
        assert!(e.lhs.iter().all(|&v| v == 0.0), "{}", e.name);
        assert!(e.bounded);
    }
}

#[test]
fn time_integral_has_positive_finite_norm() {
    let v1 = test_integral(1.0, 1.0, 0.1, 100.0, QuadTol::default()).unwrap();
    let v2 = test_integral(1.0, 1.0, 0.1, 1000.0, QuadTol::default()).unwrap();
    assert!(v1 > 0.0 && v2 > v1 && v2.is_finite());
    assert!(test_integral(0.0, 1.0, 0.1, 10.0, QuadTol::default()).is_err());
}
