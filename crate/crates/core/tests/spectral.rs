use nalgebra::DVector;
use num_complex::Complex64;
use shocklab::models::{burgers, quadratic, FluxViscositySystem};
use shocklab::profile::{solve_profile, ProfileSettings, ShockProfile};
use shocklab::spectral::{
    condition_d_verdict, eigenvalue_system, translation_residual, verify_condition_d, winding_number, Contour, EigenvalueOde,
    Evans, EvansSettings, FnContour, Verdict, WindingSettings,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn burgers_setup() -> (FluxViscositySystem, ShockProfile) {
    let m = burgers(1.0).unwrap();
    let s = ProfileSettings { halfwidth: 20.0, h: 0.01, ..Default::default() };
    let p = solve_profile(&m, &DVector::from_vec(vec![1.0]), &DVector::from_vec(vec![-1.0]), &s).unwrap();
    (m, p)
}

fn quadratic_setup() -> (FluxViscositySystem, ShockProfile) {
    let m = quadratic(1.0).unwrap();
    let s = ProfileSettings { halfwidth: 40.0, h: 0.02, ..Default::default() };
    let p = solve_profile(&m, &DVector::from_vec(vec![-0.5, 0.0]), &DVector::from_vec(vec![0.5, 0.0]), &s).unwrap();
    (m, p)
}

#[test]
fn translation_mode_is_in_the_kernel() {
    let (m, p) = burgers_setup();
    assert!(translation_residual(&m, &p).unwrap() < 1e-6);
    let (m, p) = quadratic_setup();
    assert!(translation_residual(&m, &p).unwrap() < 1e-6);
}

#[test]
fn burgers_limits_are_companion_matrices() {
    let (m, p) = burgers_setup();
    let ode = EigenvalueOde::new(&m, &p).unwrap();
    let lam = c(0.3, -0.7);
    let sys = eigenvalue_system(&ode, lam);
    assert_eq!(sys.dim(), 2);
    let mm = sys.limit_minus();
    let mp = sys.limit_plus();
    let expect = |a: f64| [c(a, 0.0), c(1.0, 0.0), lam, c(0.0, 0.0)];
    for (k, (i, j)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        assert!((mm[(i, j)] - expect(1.0)[k]).norm() < 1e-14);
        assert!((mp[(i, j)] - expect(-1.0)[k]).norm() < 1e-14);
    }
    assert_eq!((sys.unstable_dim_minus(), sys.stable_dim_plus()), (1, 1));
    let real = eigenvalue_system(&ode, c(0.8, 0.0));
    assert!(real.is_real());
    assert!(real.matrix(100).iter().all(|z| z.im == 0.0));
}

/// Two-sided shooting on `w' = u w + z, z' = lambda w` with the exact
/// coefficient `u = -tanh(x / 2)`.
fn burgers_oracle(lambda: f64, x_half: f64) -> f64 {
    let mu_m = (1.0 + (1.0 + 4.0 * lambda).sqrt()) / 2.0;
    let mu_p = (-1.0 - (1.0 + 4.0 * lambda).sqrt()) / 2.0;
    // At lambda = 1 the basis is the projector column of larger norm; Kato
    // transport keeps it parallel to r = (1, mu -+ 1) with the factor
    // exp(-int l r') = ((1 + 4 lambda) / 5)^(-1/4).
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let cm = g / (2.0 * g - 1.0);
    let cp = -g / (-2.0 * g + 1.0);
    let kato = ((1.0 + 4.0 * lambda) / 5.0).powf(-0.25);
    let vm = [cm * kato, (mu_m - 1.0) * cm * kato];
    let vp = [cp * kato, (mu_p + 1.0) * cp * kato];
    let run = |mut y: [f64; 2], sigma: f64, x0: f64, x1: f64| {
        let steps = 200_000;
        let h = (x1 - x0) / steps as f64;
        let f = |x: f64, y: [f64; 2]| {
            let u = -(x / 2.0).tanh();
            [(u - sigma) * y[0] + y[1], lambda * y[0] - sigma * y[1]]
        };
        for s in 0..steps {
            let x = x0 + s as f64 * h;
            let k1 = f(x, y);
            let k2 = f(x + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
            let k3 = f(x + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
            let k4 = f(x + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for i in 0..2 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        y
    };
    let a = run(vm, mu_m, -x_half, 0.0);
    let b = run(vp, mu_p, x_half, 0.0);
    a[0] * b[1] - a[1] * b[0]
}

#[test]
fn burgers_evans_matches_shooting_oracle() {
    let (m, p) = burgers_setup();
    let ev = Evans::new(&m, &p, EvansSettings::default()).unwrap();
    for lam in [1.0, 0.3, 2.5] {
        let d = ev.eval(c(lam, 0.0)).unwrap();
        let o = burgers_oracle(lam, 20.0);
        assert!(d.im.abs() < 1e-10 * d.re.abs());
        assert!((d.re - o).abs() < 1e-6 * o.abs(), "lambda {lam}: {d} vs {o}");
    }
}

#[test]
fn conjugate_symmetry() {
    let (m, p) = quadratic_setup();
    let ev = Evans::new(&m, &p, EvansSettings::default()).unwrap();
    for lam in [c(0.5, 0.7), c(3.0, -2.0), c(0.01, 0.02), c(-0.0005, 0.0008)] {
        let a = ev.eval(lam).unwrap();
        let b = ev.eval(lam.conj()).unwrap();
        assert!((a.conj() - b).norm() < 1e-6 * a.norm(), "{lam}: {a} {b}");
    }
}

#[test]
fn cauchy_riemann_holds() {
    let (m, p) = burgers_setup();
    let ev = Evans::new(&m, &p, EvansSettings::default()).unwrap();
    for k in 0..20 {
        let th = -1.4 + 2.8 * k as f64 / 19.0;
        let lam = Complex64::from_polar(0.05 + 0.4 * k as f64, th);
        let d = 1e-4 * lam.norm().max(0.1);
        let fx = (ev.eval(lam + d).unwrap() - ev.eval(lam - d).unwrap()) / (2.0 * d);
        let fy = (ev.eval(lam + c(0.0, d)).unwrap() - ev.eval(lam - c(0.0, d)).unwrap()) / (2.0 * d);
        let dbar = (fx + c(0.0, 1.0) * fy) * 0.5;
        let dz = (fx - c(0.0, 1.0) * fy) * 0.5;
        assert!(dbar.norm() < 1e-4 * dz.norm(), "{lam}: {} vs {}", dbar.norm(), dz.norm());
    }
}

#[test]
fn burgers_condition_d_passes() {
    let (m, p) = burgers_setup();
    let ev = Evans::new(&m, &p, EvansSettings::default()).unwrap();
    let r = verify_condition_d(&ev, Some(10.0), 1e-3, &WindingSettings::default()).unwrap();
    assert_eq!(r.excised.winding, 0);
    assert_eq!(r.small_circle.winding, 1);
    assert!(r.origin_relative < 1e-6);
    assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.notes);
    assert!((r.excised.total_arg - 2.0 * std::f64::consts::PI * r.excised.winding as f64).abs() < 1e-3);
}

#[test]
fn quadratic_condition_d_passes() {
    let (m, p) = quadratic_setup();
    let ev = Evans::new(&m, &p, EvansSettings::default()).unwrap();
    let r = verify_condition_d(&ev, None, 1e-3, &WindingSettings::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{:?} {} {}", r.notes, r.excised.winding, r.small_circle.winding);
}

#[test]
fn rescaling_schedule_is_a_gauge() {
    let (m, p) = burgers_setup();
    let a = Evans::new(&m, &p, EvansSettings { rescale_threshold: 1.0, ..Default::default() }).unwrap();
    let b = Evans::new(&m, &p, EvansSettings { rescale_threshold: 1e200, ..Default::default() }).unwrap();
    for lam in [c(0.7, 0.2), c(5.0, -3.0)] {
        let (x, y) = (a.eval(lam).unwrap(), b.eval(lam).unwrap());
        assert!((x - y).norm() < 1e-9 * x.norm());
    }
    let s = WindingSettings::default();
    let wa = winding_number(&a, &Contour::excised_half_disk(10.0, 1e-3), &s).unwrap();
    let wb = winding_number(&b, &Contour::excised_half_disk(10.0, 1e-3), &s).unwrap();
    assert_eq!(wa.winding, wb.winding);
}

#[test]
fn winding_is_refinement_invariant() {
    let (m, p) = burgers_setup();
    let ev = Evans::new(&m, &p, EvansSettings::default()).unwrap();
    let c1 = winding_number(&ev, &Contour::circle(1e-3, 64), &WindingSettings::default()).unwrap();
    let c2 = winding_number(&ev, &Contour::circle(1e-3, 64), &WindingSettings { density: 2, ..Default::default() }).unwrap();
    assert_eq!(c1.winding, 1);
    assert_eq!(c2.winding, 1);
    assert!(c2.n_points >= 2 * 64);
}

#[test]
fn stub_functions() {
    let s = WindingSettings::default();
    let constant = FnContour(|_l: Complex64| c(2.0, -1.0));
    assert_eq!(winding_number(&constant, &Contour::circle(1.0, 16), &s).unwrap().winding, 0);
    assert_eq!(winding_number(&constant, &Contour::excised_half_disk(10.0, 1e-3), &s).unwrap().winding, 0);
    // translational zero only
    let good = FnContour(|l: Complex64| l * (l + 2.0));
    let r = condition_d_verdict(&good, 10.0, 1e-3, 10.0, &s).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    // an extra zero in the right half-plane
    let bad = FnContour(|l: Complex64| l * (l - c(0.5, 0.3)));
    let r = condition_d_verdict(&bad, 10.0, 1e-3, 10.0, &s).unwrap();
    assert_eq!(r.excised.winding, 1);
    assert_eq!(r.verdict, Verdict::Fail);
    // a zero sitting on the contour trips the guard
    let on = FnContour(|l: Complex64| l * (l - c(0.0, 5.0)));
    let r = condition_d_verdict(&on, 10.0, 1e-3, 10.0, &WindingSettings { max_points: 500, ..Default::default() });
    assert!(matches!(r, Err(_)) || r.unwrap().verdict == Verdict::Indeterminate);
}
