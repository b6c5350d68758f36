use std::fs;
use std::path::Path;

use clap::Parser;
use shocklab::cli::{
    emit_plotdata, execute, load_run, run_experiment, save_run, Cli, ExperimentConfig, Stage, Status,
};

const SMOKE: &str = r#"{
  "format_version": 1,
  "name": "smoke",
  "model": { "name": "burgers" },
  "endstates": { "minus": [1.0], "plus": [-1.0] },
  "evans": { "big_radius": 10.0 },
  "simulation": { "halfwidth": 30.0, "t_final": 8.0, "auto_domain": false }
}"#;

const OVERCOMPRESSIVE: &str = r#"{
  "format_version": 1,
  "model": { "name": "cubic", "params": { "s": 0.84 } },
  "endstates": { "minus": [1.0, 0.0], "plus": [-0.2, 0.0] }
}"#;

fn smoke() -> ExperimentConfig {
    ExperimentConfig::from_json(SMOKE).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn cli(args: &[&str]) -> i32 {
    let mut full = vec!["shocklab"];
    full.extend_from_slice(args);
    execute(&Cli::try_parse_from(full).unwrap())
}

#[test]
fn pipeline_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let ra = run_experiment(&smoke(), &a, false);
    let rb = run_experiment(&smoke(), &b, false);
    assert_eq!(ra.status, Status::Complete, "{:?}", ra.failure);
    assert_eq!(rb.exit_code(), 0);
    for f in ["report.json", "diag.json", "diag.csv", "series.csv", "profile.csv", "run/run.idx.json", "run/snapshots_0000.csv", "plotdata/decay.dat", "plotdata/evans_contour.dat"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    // every gate carries the tolerance it was checked against
    let report: serde_json::Value = serde_json::from_slice(&fs::read(a.join("report.json")).unwrap()).unwrap();
    for g in report["gates"].as_array().unwrap() {
        assert!(g.get("tolerance").is_some() && g.get("target").is_some());
    }
    assert_eq!(report["provenance"]["config_hash"], smoke().hash());
}

#[test]
fn decay_table_names_reference_slopes() {
    let tmp = tempfile::tempdir().unwrap();
    run_experiment(&smoke(), tmp.path(), false);
    let text = fs::read_to_string(tmp.path().join("plotdata/decay.dat")).unwrap();
    let header = text.lines().find(|l| l.contains("ref_l2")).unwrap();
    assert!(header.contains("ref_l2(slope=-1/4)"));
    assert!(header.contains("ref_linf(slope=-1/2)"));
    let first = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(first.split_whitespace().count(), header.split_whitespace().count() - 1);
}

#[test]
fn empty_plot_list_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("plots");
    assert!(emit_plotdata(&dir, &[], 0.125).unwrap().is_empty());
    assert!(!dir.exists());
}

#[test]
fn stored_run_round_trips_exactly() {
    let c = smoke();
    let p = shocklab::cli::prepare(&c).unwrap();
    let run = p.simulate(&c).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let idx = save_run(tmp.path(), &c, &run).unwrap();
    let (c2, back) = load_run(&idx).unwrap();
    assert_eq!(c2, c);
    assert_eq!(back.w, run.w);
    assert_eq!(back.times, run.times);
    assert_eq!(back.w0, run.w0);
    assert_eq!(back.profile, run.profile);
    assert_eq!(back.delta_lsq, run.delta_lsq);
}

#[test]
fn overcompressive_is_refused_before_any_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let c = ExperimentConfig::from_json(OVERCOMPRESSIVE).unwrap();
    let r = run_experiment(&c, tmp.path(), true);
    assert_eq!(r.status, Status::Refused);
    assert_eq!(r.exit_code(), 2);
    let f = r.failure.unwrap();
    assert_eq!(f.stage, Stage::Classify);
    assert!(f.message.contains("overcompressive unsupported"), "{}", f.message);
    assert!(!tmp.path().join("run").exists());
    assert!(!tmp.path().join("profile.csv").exists());
    let cfg = write_config(tmp.path(), "oc.json", OVERCOMPRESSIVE);
    assert_eq!(cli(&["--config", &cfg, "--out", tmp.path().to_str().unwrap(), "simulate"]), 2);
}

#[test]
fn failed_evans_gate_skips_simulation_unless_forced() {
    // an unattainable guard ratio makes the contour verdict indeterminate
    let text = SMOKE.replace(r#""big_radius": 10.0"#, r#""big_radius": 10.0, "guard_ratio": 1e300, "max_points": 400"#);
    let c = ExperimentConfig::from_json(&text).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let gated = tmp.path().join("gated");
    let r = run_experiment(&c, &gated, false);
    assert_eq!(r.exit_code(), 2);
    assert_eq!(r.failure.as_ref().unwrap().stage, Stage::Evans);
    assert!(r.simulation.is_none() && !r.skipped.is_empty());
    assert!(!gated.join("run").exists());
    assert!(gated.join("report.json").exists() && gated.join("profile.csv").exists());
    let forced = tmp.path().join("forced");
    let r = run_experiment(&c, &forced, true);
    assert_eq!(r.exit_code(), 0);
    assert!(r.evans_forced && forced.join("run/run.idx.json").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap().to_string();
    let unknown_key = write_config(tmp.path(), "bad.json", &SMOKE.replace(r#""name": "smoke""#, r#""nmae": "smoke""#));
    assert_eq!(cli(&["--config", &unknown_key, "--out", &out, "run"]), 4);
    let bad_model = write_config(tmp.path(), "model.json", &SMOKE.replace(r#""burgers""#, r#""euler""#));
    assert_eq!(cli(&["--config", &bad_model, "--out", &out, "profile"]), 4);
    assert_eq!(cli(&["--config", "/does/not/exist.json", "run"]), 4);
    let big_dt = write_config(tmp.path(), "dt.json", &SMOKE.replace(r#""auto_domain": false"#, r#""auto_domain": false, "dt": 0.5"#));
    assert_eq!(cli(&["--config", &big_dt, "--out", &out, "simulate"]), 3);
    let ok = write_config(tmp.path(), "ok.json", SMOKE);
    assert_eq!(cli(&["--config", &ok, "--out", &out, "profile"]), 0);
    assert!(tmp.path().join("profile.json").exists());
}

#[test]
fn simulate_then_analyze_matches_full_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "smoke.json", SMOKE);
    let sim = tmp.path().join("sim");
    assert_eq!(cli(&["--config", &cfg, "--out", sim.to_str().unwrap(), "simulate"]), 0);
    let idx = sim.join("run/run.idx.json");
    let diag = sim.join("diag.json");
    let csv = sim.join("d.csv");
    assert_eq!(cli(&["analyze", "--run", idx.to_str().unwrap(), "--out", diag.to_str().unwrap(), "--csv", csv.to_str().unwrap()]), 0);
    let full = tmp.path().join("full");
    run_experiment(&smoke(), &full, false);
    assert_eq!(fs::read(&diag).unwrap(), fs::read(full.join("diag.json")).unwrap());
    assert_eq!(fs::read(&csv).unwrap(), fs::read(full.join("diag.csv")).unwrap());
}

#[test]
fn sweep_runs_each_amplitude_in_its_own_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "smoke.json", SMOKE);
    let out = tmp.path().join("sweep");
    let code = cli(&["--config", &cfg, "--out", out.to_str().unwrap(), "sweep", "--amplitudes", "0.005,0.01", "--jobs", "2"]);
    assert_eq!(code, 0);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("sweep.json")).unwrap()).unwrap();
    let entries = summary.as_array().unwrap();
    assert_eq!(entries.len(), 2);
    for e in entries {
        assert!(out.join(e["label"].as_str().unwrap()).join("report.json").exists());
    }
    // small-data linearity of the final zeta
    let z: Vec<f64> = entries.iter().map(|e| e["zeta_final"].as_f64().unwrap() / e["epsilon"].as_f64().unwrap()).collect();
    assert!((z[0] / z[1] - 1.0).abs() < 0.05, "{z:?}");
}
