//! Command-line driver: declarative configs, the staged pipeline, stored
//! runs and plot tables.
//!
//! Exit codes: 0 success, 2 gate refusal, 3 numerical failure, 4
//! configuration error.

pub mod config;
pub mod pipeline;
pub mod plot;
pub mod store;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use rayon::prelude::*;
use serde::Serialize;

pub use config::{EvansConfig, ExperimentConfig, ModelSpec, ProfileConfig, FORMAT_VERSION};
pub use pipeline::{
    prepare, run_experiment, ExperimentReport, Gate, Layout, Prepared, Stage, StageError, StageResult, Status, Tag,
};
pub use plot::{emit_evans_plot, emit_plotdata, PlotRun};
pub use store::{load_run, save_run, RunIndex, INDEX_FILE};

use crate::error::Error;
use crate::kernels::{verify_aux_bounds, verify_ebounds, AuxSettings, EboundsSettings, TestFunction};
use crate::spectral::Verdict;
use pipeline::{AnalysisSummary, EvansSummary, Provenance};
use store::{write_diagnostics_csv, write_json, write_profile, write_series};

#[derive(Debug, Parser)]
#[command(name = "shocklab", version, about = "Viscous shock stability laboratory")]
pub struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (for `analyze`, a `.json` path names the diagnostics file).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Continue past a failed Evans gate.
    #[arg(long, global = true)]
    pub force: bool,
    /// Log progress at info level.
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the standing profile and check the structural assumptions.
    Profile,
    /// Count Evans-function zeros in the closed right half-plane.
    Evans,
    /// Simulate the perturbed profile and store the run.
    Simulate,
    /// Analyze a stored run.
    Analyze(AnalyzeArgs),
    /// Full pipeline: profile, Evans gate, simulation, analysis, report.
    Run,
    /// Run several configurations and amplitudes in parallel.
    Sweep(SweepArgs),
    /// Numerical checks of the kernel and auxiliary bounds.
    Kernels {
        #[command(subcommand)]
        action: KernelsAction,
    },
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Run index written by `simulate`.
    #[arg(long)]
    pub run: PathBuf,
    /// Per-snapshot diagnostics table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Additional configurations.
    pub configs: Vec<PathBuf>,
    /// Perturbation amplitudes applied to every configuration.
    #[arg(long, value_delimiter = ',')]
    pub amplitudes: Vec<f64>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum KernelsAction {
    Verify {
        #[arg(long, value_enum)]
        which: Which,
        /// Final time of the check.
        #[arg(long)]
        tmax: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Ebounds,
    Aux,
}

fn config_error(msg: impl Into<String>) -> StageError {
    StageError { stage: Stage::Config, source: Error::Config(msg.into()) }
}

fn load_config(cli: &Cli) -> StageResult<ExperimentConfig> {
    let path = cli.config.as_ref().ok_or_else(|| config_error("--config is required for this command"))?;
    ExperimentConfig::load(path).stage(Stage::Config)
}

fn out_dir(cli: &Cli, config: Option<&ExperimentConfig>) -> PathBuf {
    if let Some(o) = &cli.out {
        return o.clone();
    }
    match config {
        Some(c) => c.output.clone().unwrap_or_else(|| PathBuf::from("out").join(c.label())),
        None => PathBuf::from("out"),
    }
}

fn mkdir(dir: &Path) -> StageResult<()> {
    std::fs::create_dir_all(dir).stage(Stage::Output)
}

#[derive(Serialize)]
struct ProfileDocument<'a> {
    provenance: Provenance,
    classification: &'a pipeline::Classification,
    profile: pipeline::ProfileSummary,
    assumptions: crate::models::AssumptionReport,
}

fn cmd_profile(cli: &Cli) -> StageResult<i32> {
    let config = load_config(cli)?;
    let out = out_dir(cli, Some(&config));
    mkdir(&out)?;
    let p = prepare(&config)?;
    let layout = Layout::new(&out);
    write_profile(&layout.profile(), &p.profile).stage(Stage::Output)?;
    let doc = ProfileDocument {
        provenance: Provenance::of(&config),
        classification: &p.classification,
        profile: p.profile_summary(&config),
        assumptions: p.assumptions()?,
    };
    write_json(&out.join("profile.json"), &doc).stage(Stage::Output)?;
    println!(
        "{:?} profile on [-{}, {}], {} nodes, residual {:.3e}; written to {}",
        p.classification.shock_type,
        p.profile.halfwidth,
        p.profile.halfwidth,
        p.profile.len(),
        p.profile.residual,
        out.display()
    );
    Ok(0)
}

fn cmd_evans(cli: &Cli) -> StageResult<i32> {
    let config = load_config(cli)?;
    let out = out_dir(cli, Some(&config));
    mkdir(&out)?;
    let p = prepare(&config)?;
    let ev = p.evans(&config)?;
    emit_evans_plot(&Layout::new(&out).plotdata(), &ev).stage(Stage::Output)?;
    #[derive(Serialize)]
    struct Doc<'a> {
        provenance: Provenance,
        summary: EvansSummary,
        result: &'a crate::spectral::EvansContourResult,
    }
    write_json(&out.join("evans.json"), &Doc { provenance: Provenance::of(&config), summary: EvansSummary::of(&ev), result: &ev })
        .stage(Stage::Output)?;
    println!(
        "Evans verdict {:?}: winding {} on the excised half-disk, {} around the origin",
        ev.verdict, ev.excised.winding, ev.small_circle.winding
    );
    Ok(if ev.verdict == Verdict::Pass { 0 } else { 2 })
}

fn cmd_simulate(cli: &Cli) -> StageResult<i32> {
    let config = load_config(cli)?;
    let out = out_dir(cli, Some(&config));
    mkdir(&out)?;
    let p = prepare(&config)?;
    let run = p.simulate(&config)?;
    let layout = Layout::new(&out);
    let index = save_run(&layout.run_dir(), &config, &run).stage(Stage::Output)?;
    write_series(&layout.series(), &run).stage(Stage::Output)?;
    println!(
        "{} snapshots to t = {}, ledger residual {:.3e} per unit time; index {}",
        run.times.len(),
        run.times.last().unwrap_or(&0.0),
        run.ledger.residual_per_time,
        index.display()
    );
    Ok(0)
}

fn cmd_analyze(cli: &Cli, args: &AnalyzeArgs) -> StageResult<i32> {
    let (config, run) = load_run(&args.run).stage(Stage::Config)?;
    let (diag_path, dir) = match &cli.out {
        Some(o) if o.extension().is_some_and(|e| e == "json") => {
            (o.clone(), o.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        Some(o) => (o.join("diag.json"), o.clone()),
        None => {
            let d = args.run.parent().and_then(Path::parent).map(Path::to_path_buf).unwrap_or_default();
            (d.join("diag.json"), d)
        }
    };
    if !dir.as_os_str().is_empty() {
        mkdir(&dir)?;
    }
    let p = prepare(&config)?;
    let diag = p.analyze(&config, &run)?;
    write_json(&diag_path, &AnalysisSummary::of(&diag)).stage(Stage::Output)?;
    let csv = args.csv.clone().unwrap_or_else(|| dir.join("diag.csv"));
    write_diagnostics_csv(&csv, &diag).stage(Stage::Output)?;
    emit_plotdata(&dir.join("plotdata"), &[PlotRun { label: "", run: &run, diag: &diag }], config.analysis.fit_start)
        .stage(Stage::Output)?;
    for e in &diag.exponents {
        match &e.fit {
            Some(f) => println!("{:>9}: exponent {:+.4} (target {:+.2} +- {:.2}) {}", e.name, f.exponent, e.target, e.tolerance, verdict(e.pass)),
            None => println!("{:>9}: {}", e.name, e.error.as_deref().unwrap_or("no fit")),
        }
    }
    println!("zeta(T)/zeta(T/2) = {:.4}, damping C = {:.4} at nu = {:.3}", diag.zeta_ratio, diag.damping.constant, diag.damping.nu);
    Ok(0)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

fn print_report(r: &ExperimentReport) {
    match &r.failure {
        None => println!("{}: complete", r.name),
        Some(f) => println!("{}: stopped at {} stage (exit {}): {}", r.name, f.stage, f.exit_code, f.message),
    }
    for g in &r.gates {
        println!("  {:<28} {:>12.5e}  target {:+.3e} tol {:.2e}  {}", g.name, g.value, g.target, g.tolerance, verdict(g.pass));
    }
    for s in &r.skipped {
        println!("  skipped: {s}");
    }
}

fn cmd_run(cli: &Cli) -> StageResult<i32> {
    let config = load_config(cli)?;
    let out = out_dir(cli, Some(&config));
    let report = run_experiment(&config, &out, cli.force);
    print_report(&report);
    Ok(report.exit_code())
}

#[derive(Serialize)]
struct SweepEntry {
    label: String,
    epsilon: f64,
    status: Status,
    exit_code: i32,
    zeta_final: Option<f64>,
    vertical_final: Vec<(f64, f64)>,
    max_phase_discrepancy: Option<f64>,
    gates_passed: usize,
    gates_total: usize,
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> StageResult<i32> {
    let mut paths: Vec<PathBuf> = cli.config.iter().cloned().collect();
    paths.extend(args.configs.iter().cloned());
    if paths.is_empty() {
        return Err(config_error("sweep needs at least one configuration"));
    }
    let mut jobs = Vec::new();
    for path in &paths {
        let base = ExperimentConfig::load(path).stage(Stage::Config)?;
        if args.amplitudes.is_empty() {
            jobs.push(base);
            continue;
        }
        for &eps in &args.amplitudes {
            let mut c = base.clone();
            c.simulation.perturbation.amplitude = eps;
            c.name = format!("{}_eps{eps}", base.label());
            c.validate().stage(Stage::Config)?;
            jobs.push(c);
        }
    }
    let root = out_dir(cli, None);
    mkdir(&root)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| config_error(e.to_string()))?;
    info!("sweeping {} runs", jobs.len());
    let force = cli.force;
    let reports: Vec<ExperimentReport> =
        pool.install(|| jobs.par_iter().map(|c| run_experiment(c, &root.join(c.label()), force)).collect());
    let entries: Vec<SweepEntry> = jobs
        .iter()
        .zip(&reports)
        .map(|(c, r)| SweepEntry {
            label: c.label(),
            epsilon: c.simulation.perturbation.amplitude,
            status: r.status,
            exit_code: r.exit_code(),
            zeta_final: r.analysis.as_ref().map(|a| a.zeta_final),
            vertical_final: r.analysis.as_ref().map_or(Vec::new(), |a| a.vertical.iter().map(|v| (v.x, v.value)).collect()),
            max_phase_discrepancy: r.analysis.as_ref().map(|a| a.max_phase_discrepancy),
            gates_passed: r.gates.iter().filter(|g| g.pass).count(),
            gates_total: r.gates.len(),
        })
        .collect();
    write_json(&root.join("sweep.json"), &entries).stage(Stage::Output)?;
    for r in &reports {
        print_report(r);
    }
    Ok(reports.iter().map(|r| r.exit_code()).max().unwrap_or(0))
}

fn cmd_kernels(cli: &Cli, which: Which, tmax: Option<f64>) -> StageResult<i32> {
    let config = match &cli.config {
        Some(_) => load_config(cli)?,
        None => ExperimentConfig::from_json(
            r#"{"format_version": 1, "name": "burgers", "model": {"name": "burgers"}, "endstates": {"minus": [1], "plus": [-1]}}"#,
        )
        .stage(Stage::Config)?,
    };
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out").join("kernels"));
    mkdir(&out)?;
    match which {
        Which::Ebounds => {
            let p = prepare(&config)?;
            let kernel = p.kernel()?;
            let mut s = EboundsSettings { eta: 0.5 * p.profile.tail_rate(), ..Default::default() };
            if let Some(t) = tmax {
                s.tmax = t;
            }
            let report = verify_ebounds(&kernel, &s).stage(Stage::Analyze)?;
            write_json(&out.join("ebounds.json"), &report).stage(Stage::Output)?;
            for item in &report.items {
                println!(
                    "[{:>3}] C = {:.4e}, refined {:.4e}, drift {:.2}%  {}",
                    item.name,
                    item.constant,
                    item.constant_refined,
                    100.0 * item.drift,
                    verdict(item.pass)
                );
            }
            println!("gamma-weighted terms vanish: {}", report.gamma_terms_vanish);
        }
        Which::Aux => {
            let mut s = AuxSettings::default();
            if let Some(t) = tmax {
                s.tmax_test = t;
            }
            let report = verify_aux_bounds(&s, &TestFunction::gaussian()).stage(Stage::Analyze)?;
            write_json(&out.join("aux.json"), &report).stage(Stage::Output)?;
            for e in &report.entries {
                let station = e.station.map(|x| format!(" at x = {x:+}")).unwrap_or_default();
                println!("{}{}: growth {:.2}% over x{}  {}", e.name, station, 100.0 * e.growth, e.window, verdict(e.bounded));
            }
        }
    }
    Ok(0)
}

/// Executes a parsed command line and returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Profile => cmd_profile(cli),
        Command::Evans => cmd_evans(cli),
        Command::Simulate => cmd_simulate(cli),
        Command::Analyze(a) => cmd_analyze(cli, a),
        Command::Run => cmd_run(cli),
        Command::Sweep(a) => cmd_sweep(cli, a),
        Command::Kernels { action: KernelsAction::Verify { which, tmax } } => cmd_kernels(cli, *which, *tmax),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parses the process arguments, sets up logging and runs the command.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    execute(&cli)
}
