//! Acceptance report: one line per criterion with the measured value and
//! the pinned tolerance. Exits 0 after printing; set `ACCEPTANCE_STRICT=1`
//! to exit 1 when a criterion fails.

use std::time::Instant;

use nalgebra::DVector;
use shocklab::analysis::{damping_monitor, AnalysisSettings, Diagnostics};
use shocklab::cli::{prepare, ExperimentConfig, Prepared};
use shocklab::kernels::{verify_aux_bounds, verify_ebounds, AuxSettings, EboundsSettings, TestFunction};
use shocklab::models::burgers;
use shocklab::profile::{solve_profile, ProfileSettings};
use shocklab::sim::SimulationRun;
use shocklab::spectral::{verify_condition_d, Evans, EvansSettings, WindingSettings};

struct Line {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn config(model: &str, um: &str, up: &str, extra: &str) -> ExperimentConfig {
    let text = format!(
        r#"{{"format_version": 1, "model": {{"name": "{model}"}}, "endstates": {{"minus": {um}, "plus": {up}}},
            "profile": {{"halfwidth": 40.0, "h": 0.01}} {extra}}}"#
    );
    ExperimentConfig::from_json(&text).expect("acceptance config")
}

fn burgers_config(t_final: f64, eps: f64) -> ExperimentConfig {
    let mut c = config("burgers", "[1.0]", "[-1.0]", "");
    c.simulation.t_final = t_final;
    c.simulation.perturbation.amplitude = eps;
    c
}

fn uc_config(t_final: f64, h: f64) -> ExperimentConfig {
    let mut c = config("quadratic", "[-0.5, 0.0]", "[0.5, 0.0]", "");
    c.simulation.t_final = t_final;
    c.simulation.h = h;
    c.simulation.perturbation.direction = Some(vec![0.0, 1.0]);
    c
}

struct Case {
    run: SimulationRun,
    diag: Diagnostics,
    seconds: f64,
}

fn simulate(p: &Prepared, c: &ExperimentConfig) -> Result<(SimulationRun, f64), String> {
    let start = Instant::now();
    let run = p.simulate(c).map_err(|e| e.to_string())?;
    Ok((run, start.elapsed().as_secs_f64()))
}

fn case(p: &Prepared, c: &ExperimentConfig, run: SimulationRun, sim_seconds: f64) -> Result<Case, String> {
    let start = Instant::now();
    let diag = p.analyze(c, &run).map_err(|e| e.to_string())?;
    Ok(Case { run, diag, seconds: sim_seconds + start.elapsed().as_secs_f64() })
}

fn exponent_line(c: &Case) -> (bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    for e in &c.diag.exponents {
        pass &= e.pass;
        let v = e.fit.as_ref().map_or("n/a".to_string(), |f| format!("{:+.3}", f.exponent));
        parts.push(format!("{} {v} (target {:+.2}±{:.2}{})", e.name, e.target, e.tolerance, if e.pass { "" } else { " ✗" }));
    }
    (pass, parts.join(", "))
}

fn spread(v: &[f64]) -> f64 {
    let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
    hi / lo - 1.0
}

fn c1() -> Line {
    let start = Instant::now();
    let m = burgers(1.0).unwrap();
    let s = ProfileSettings { halfwidth: 20.0, h: 0.01, ..Default::default() };
    let p = solve_profile(&m, &DVector::from_vec(vec![1.0]), &DVector::from_vec(vec![-1.0]), &s).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let err = p.x.iter().zip(&p.u).fold(0.0f64, |e, (x, u)| e.max((u + (0.5 * x).tanh()).abs()));
    Line {
        id: 1,
        title: "profile oracle",
        pass: err < 1e-8 && secs < 1.0,
        detail: format!("max |U - (-tanh(x/2))| = {err:.2e} (< 1e-8), {secs:.2} s (< 1 s)"),
    }
}

fn c2() -> Line {
    let start = Instant::now();
    let m = burgers(1.0).unwrap();
    let s = ProfileSettings { halfwidth: 20.0, h: 0.01, ..Default::default() };
    let p = solve_profile(&m, &DVector::from_vec(vec![1.0]), &DVector::from_vec(vec![-1.0]), &s).unwrap();
    let r = Evans::new(&m, &p, EvansSettings::default())
        .and_then(|ev| verify_condition_d(&ev, None, 1e-3, &WindingSettings::default()));
    let secs = start.elapsed().as_secs_f64();
    match r {
        Ok(r) => Line {
            id: 2,
            title: "Evans gate",
            pass: r.excised.winding == 0 && r.small_circle.winding == 1 && secs < 30.0,
            detail: format!(
                "winding {} on the excised half-disk (R = {}, rho = {}) and {} on the origin circle (expected 0, 1), {secs:.1} s (< 30 s)",
                r.excised.winding, r.big_radius, r.small_radius, r.small_circle.winding
            ),
        },
        Err(e) => Line { id: 2, title: "Evans gate", pass: false, detail: format!("error: {e}") },
    }
}

fn c7() -> Line {
    let mut pass = true;
    let mut parts = Vec::new();
    for c in [config("burgers", "[1.0]", "[-1.0]", ""), uc_config(1.0, 0.05)] {
        let p = prepare(&c).unwrap();
        let k = p.kernel().unwrap();
        let eta = 0.5 * p.profile.tail_rate();
        match verify_ebounds(&k, &EboundsSettings { eta, ..Default::default() }) {
            Ok(r) => {
                let bad: Vec<String> = r.items.iter().filter(|i| !i.pass).map(|i| format!("[{}] drift {:.1}%", i.name, 100.0 * i.drift)).collect();
                let worst = r.items.iter().fold(0.0f64, |m, i| m.max(i.drift));
                let vanish_ok = r.gamma != 0 || r.gamma_terms_vanish;
                pass &= bad.is_empty() && vanish_ok;
                parts.push(format!(
                    "{} (gamma = {}): max drift {:.1}% (< 10%){}{}",
                    c.model.name,
                    r.gamma,
                    100.0 * worst,
                    if bad.is_empty() { String::new() } else { format!(", failing {}", bad.join(", ")) },
                    if r.gamma == 0 { format!(", gamma terms vanish: {}", r.gamma_terms_vanish) } else { String::new() }
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{}: error {e}", c.model.name));
            }
        }
    }
    Line { id: 7, title: "kernel bound suite", pass, detail: parts.join("; ") }
}

fn c8() -> Line {
    match verify_aux_bounds(&AuxSettings::default(), &TestFunction::gaussian()) {
        Ok(r) => {
            let test = r.entries.iter().find(|e| e.name == "test").unwrap();
            let aux1: Vec<_> = r.entries.iter().filter(|e| e.name == "aux1").collect();
            let aux1_growth = aux1.iter().fold(0.0f64, |m, e| m.max(e.growth));
            let pass = test.growth.abs() <= 0.05 && aux1.iter().all(|e| e.bounded);
            Line {
                id: 8,
                title: "auxiliary bounds",
                pass,
                detail: format!(
                    "(test) at t = 1e4 vs 1e6 differs by {:.2}% (< 5%); (aux1) running sup grows {:.2}% over the last decade (< 5%)",
                    100.0 * test.growth,
                    100.0 * aux1_growth
                ),
            }
        }
        Err(e) => Line { id: 8, title: "auxiliary bounds", pass: false, detail: format!("error: {e}") },
    }
}

fn run_all() -> Vec<Line> {
    let mut lines = vec![c1(), c2()];

    // Burgers to T = 400; its T = 200 prefix is the default run (same
    // domain and step, so bit-identical to a T = 200 run)
    let bc = burgers_config(400.0, 1e-2);
    let bp = prepare(&bc).expect("burgers setup");
    let long = simulate(&bp, &bc);
    let burgers_cases = long.and_then(|(run, secs)| {
        let c200 = burgers_config(200.0, 1e-2);
        let def = case(&bp, &c200, run.truncated(200.0), secs)?;
        let full = case(&bp, &bc, run, 0.0)?;
        Ok((def, full))
    });
    let mut sweep = Vec::new();
    for eps in [5e-3, 2e-2] {
        let c = burgers_config(200.0, eps);
        sweep.push(simulate(&bp, &c).and_then(|(r, s)| case(&bp, &c, r, s)).map(|k| (eps, k)));
    }
    let uc = uc_config(200.0, 0.05);
    let ucp = prepare(&uc).expect("undercompressive setup");
    let uc_case = simulate(&ucp, &uc).and_then(|(r, s)| case(&ucp, &uc, r, s));

    match &burgers_cases {
        Ok((def, _)) => {
            let (pass, detail) = exponent_line(def);
            lines.push(Line {
                id: 3,
                title: "Lax decay rates",
                pass: pass && def.seconds < 300.0,
                detail: format!("{detail}; {:.0} s for the T = 400 run and T = 200 analysis (< 300 s)", def.seconds),
            });
        }
        Err(e) => lines.push(Line { id: 3, title: "Lax decay rates", pass: false, detail: format!("error: {e}") }),
    }
    match &uc_case {
        Ok(k) => {
            let (pass, detail) = exponent_line(k);
            lines.push(Line {
                id: 4,
                title: "undercompressive decay rates",
                pass: pass && k.seconds < 600.0,
                detail: format!("{detail}; {:.0} s (< 600 s)", k.seconds),
            });
        }
        Err(e) => lines.push(Line { id: 4, title: "undercompressive decay rates", pass: false, detail: format!("error: {e}") }),
    }

    // eps sweep ordered 0.005, 0.01, 0.02
    let mut eps_cases: Vec<(f64, &Case)> = Vec::new();
    if let (Ok((def, _)), Ok(a), Ok(b)) = (&burgers_cases, &sweep[0], &sweep[1]) {
        eps_cases = vec![(a.0, &a.1), (1e-2, def), (b.0, &b.1)];
    }
    if eps_cases.len() == 3 {
        let def = eps_cases[1].1;
        let worst_ratio = def.diag.vertical_ratio.iter().fold(0.0f64, |m, (_, r)| m.max(*r));
        let nprobe = def.diag.zeta.vertical.len();
        let mut worst_spread = 0.0f64;
        for j in 0..nprobe {
            let scaled: Vec<f64> = eps_cases.iter().map(|(e, k)| k.diag.zeta.vertical[j].values.last().unwrap() / e).collect();
            worst_spread = worst_spread.max(spread(&scaled));
        }
        lines.push(Line {
            id: 5,
            title: "vertical estimate",
            pass: worst_ratio < 1.15 && worst_spread < 0.25,
            detail: format!(
                "max_x* vertical(T)/vertical(T/2) = {worst_ratio:.4} (< 1.15); max_x* spread of vertical(T)/eps over eps in {{0.005, 0.01, 0.02}} = {:.1}% (< 25%)",
                100.0 * worst_spread
            ),
        });
        let zr = def.diag.zeta_ratio;
        let zs: Vec<f64> = eps_cases.iter().map(|(e, k)| k.diag.zeta.zeta.last().unwrap() / e).collect();
        lines.push(Line {
            id: 6,
            title: "zeta saturation",
            pass: zr < 1.1 && spread(&zs) < 0.25,
            detail: format!(
                "zeta(T)/zeta(T/2) = {zr:.4} (< 1.1); zeta(T)/eps = {:.4}, {:.4}, {:.4} spread {:.1}% (< 25%)",
                zs[0],
                zs[1],
                zs[2],
                100.0 * spread(&zs)
            ),
        });
    } else {
        let msg = "error: a run of the eps sweep failed".to_string();
        lines.push(Line { id: 5, title: "vertical estimate", pass: false, detail: msg.clone() });
        lines.push(Line { id: 6, title: "zeta saturation", pass: false, detail: msg });
    }

    lines.push(c7());
    lines.push(c8());

    // damping: finite constants on every accepted run, drift under T doubling
    match (&burgers_cases, &uc_case) {
        (Ok((def, full)), Ok(uk)) => {
            let c200 = def.diag.damping.constant;
            let c400 = full.diag.damping.constant;
            // same nu on both horizons
            let hs2: Vec<f64> = full.run.norms.iter().map(|n| n.hs * n.hs).collect();
            let drive: Vec<f64> =
                full.run.norms.iter().zip(&full.diag.phase.deltadot_kernel).map(|(n, d)| n.l2 * n.l2 + d * d).collect();
            let reference = damping_monitor(&full.run.times, &hs2, &drive, &AnalysisSettings::default().damping()).ok();
            let drift = (c400 - c200).abs() / c200;
            let mut finite = vec![c200, c400, uk.diag.damping.constant];
            finite.extend(eps_cases.iter().map(|(_, k)| k.diag.damping.constant));
            let all_finite = finite.iter().all(|c| c.is_finite() && *c > 0.0);
            lines.push(Line {
                id: 9,
                title: "damping monitor",
                pass: all_finite && drift < 0.1 && uk.diag.damping.drift < 0.1,
                detail: format!(
                    "Burgers C(T=200) = {c200:.4} at nu = {:.3}, C(T=400) = {c400:.4} at nu = {:.3}, drift {:.2}% (< 10%); undercompressive C = {:.4}, half-horizon drift {:.2}% (< 10%); all {} constants finite: {all_finite}{}",
                    def.diag.damping.nu,
                    full.diag.damping.nu,
                    100.0 * drift,
                    uk.diag.damping.constant,
                    100.0 * uk.diag.damping.drift,
                    finite.len(),
                    reference.map_or(String::new(), |r| format!(", T=400 half-horizon drift {:.2}%", 100.0 * r.drift))
                ),
            });
        }
        _ => lines.push(Line { id: 9, title: "damping monitor", pass: false, detail: "error: a run failed".into() }),
    }

    if eps_cases.len() == 3 {
        let d: Vec<f64> = eps_cases.iter().map(|(_, k)| k.diag.phase.max_discrepancy).collect();
        let (r1, r2) = (d[1] / d[0], d[2] / d[1]);
        let ok = |r: f64| (3.0..=5.0).contains(&r);
        lines.push(Line {
            id: 10,
            title: "phase-extractor consistency",
            pass: ok(r1) && ok(r2),
            detail: format!(
                "max|delta_kernel - delta_lsq| = {:.3e}, {:.3e}, {:.3e} at eps = 0.005, 0.01, 0.02; halving ratios {r1:.2}, {r2:.2} (in [3, 5])",
                d[0], d[1], d[2]
            ),
        });
    } else {
        lines.push(Line { id: 10, title: "phase-extractor consistency", pass: false, detail: "error: a run failed".into() });
    }

    lines.push(c11(&bp, burgers_cases.as_ref().ok().map(|(_, f)| f)));
    lines.sort_by_key(|l| l.id);
    lines
}

fn c11(bp: &Prepared, long: Option<&Case>) -> Line {
    let quiet = burgers_config(100.0, 0.0);
    let stationary = bp.simulate(&quiet).map(|r| r.final_deviation);
    let ledger = long.map(|k| k.run.ledger.residual_per_time);
    let conv = (|| -> Result<(f64, f64), String> {
        let coarse = uc_config(100.0, 0.05);
        let fine = uc_config(100.0, 0.025);
        let p = prepare(&coarse).map_err(|e| e.to_string())?;
        let a = p.simulate(&coarse).map_err(|e| e.to_string())?;
        let b = p.simulate(&fine).map_err(|e| e.to_string())?;
        Ok((a.norms.last().unwrap().l2, b.norms.last().unwrap().l2))
    })();
    match (stationary, ledger, conv) {
        (Ok(dev), Some(led), Ok((a, b))) => {
            let rel = (a - b).abs() / b;
            Line {
                id: 11,
                title: "simulation hygiene",
                pass: dev < 1e-6 && led < 1e-8 && rel < 0.05,
                detail: format!(
                    "eps = 0: max|U(T=100) - U| = {dev:.2e} (< 1e-6); ledger {led:.2e} per unit time (< 1e-8); |w(T=100)|_L2 {a:.5e} vs {b:.5e} under (h, dt) halving, {:.2}% (< 5%)",
                    100.0 * rel
                ),
            }
        }
        (s, l, c) => Line {
            id: 11,
            title: "simulation hygiene",
            pass: false,
            detail: format!("error: stationarity {:?}, ledger {:?}, convergence {:?}", s.map_err(|e| e.to_string()), l, c),
        },
    }
}

fn main() {
    // `cargo test` passes harness flags; listing requests print nothing
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let start = Instant::now();
    let lines = run_all();
    println!();
    for l in &lines {
        println!("{} {:>2}. {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.id, l.title, l.detail);
    }
    let passed = lines.iter().filter(|l| l.pass).count();
    println!("{passed}/{} criteria pass ({:.0} s)", lines.len(), start.elapsed().as_secs_f64());
    if passed < lines.len() && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
