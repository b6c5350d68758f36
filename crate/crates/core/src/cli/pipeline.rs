//! The end-to-end experiment: classify, profile, assumptions, Evans gate,
//! simulation, analysis and report.

use std::fmt;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;

use super::config::{ExperimentConfig, FORMAT_VERSION};
use super::plot::{emit_evans_plot, emit_plotdata, PlotRun};
use super::store::{save_run, write_diagnostics_csv, write_json, write_profile, write_series};
use crate::analysis::{analyze, DampingReport, DecayEntry, Diagnostics};
use crate::error::{Error, Result};
use crate::kernels::{KernelE, LMode};
use crate::models::{check_assumptions, rankine_hugoniot_speed, AssumptionReport, FluxViscositySystem};
use crate::profile::{characteristic_data, endstate_characteristics, solve_profile, CharacteristicData, ShockProfile, ShockType};
use crate::sim::{run_simulation, ConservationLedger, SimulationRun};
use crate::spectral::{verify_condition_d, Evans, EvansContourResult, Verdict};

/// Mass balance accepted per unit time.
pub const LEDGER_TOL: f64 = 1e-8;
/// Accepted `zeta(T) / zeta(T/2)`.
pub const ZETA_RATIO_TOL: f64 = 1.1;
/// Accepted `vertical(x*, T) / vertical(x*, T/2)`.
pub const VERTICAL_RATIO_TOL: f64 = 1.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Config,
    Classify,
    Profile,
    Assumptions,
    Evans,
    Simulate,
    Analyze,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("stage serializes");
        write!(f, "{}", s.as_str().unwrap_or("?"))
    }
}

/// An error tagged with the stage that raised it.
#[derive(Debug, thiserror::Error)]
#[error("{stage} stage: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl StageError {
    /// 2 for gate refusals, 3 for numerical failures, 4 for configuration
    /// errors.
    pub fn exit_code(&self) -> i32 {
        if self.stage == Stage::Config {
            return 4;
        }
        match self.source {
            Error::Config(_) | Error::UnknownModel(_) => 4,
            Error::Gate(_) | Error::Unsupported(_) => 2,
            _ => 3,
        }
    }
}

pub type StageResult<T> = std::result::Result<T, StageError>;

pub trait Tag<T> {
    fn stage(self, stage: Stage) -> StageResult<T>;
}

impl<T> Tag<T> for Result<T> {
    fn stage(self, stage: Stage) -> StageResult<T> {
        self.map_err(|source| StageError { stage, source })
    }
}

impl<T> Tag<T> for std::io::Result<T> {
    fn stage(self, stage: Stage) -> StageResult<T> {
        self.map_err(|e| StageError { stage, source: Error::Io(e) })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub code_version: String,
    pub format_version: u32,
}

impl Provenance {
    pub fn of(config: &ExperimentConfig) -> Provenance {
        Provenance {
            config_hash: config.hash(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            format_version: FORMAT_VERSION,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub shock_type: ShockType,
    pub gamma: Option<u8>,
    pub i_minus: usize,
    pub i_plus: usize,
    pub a_minus: Vec<f64>,
    pub a_plus: Vec<f64>,
    pub beta_minus: Vec<f64>,
    pub beta_plus: Vec<f64>,
    /// Least-squares shock speed in the model frame and its residual.
    pub rh_speed: f64,
    pub rh_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileSummary {
    pub halfwidth: f64,
    pub h: f64,
    pub nodes: usize,
    pub residual: f64,
    pub residual_tol: f64,
    pub endstate_error: f64,
    pub endstate_tol: f64,
    pub tail_rate: f64,
    pub biorthogonality_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvansSummary {
    pub verdict: Verdict,
    pub excised_winding: i64,
    pub small_circle_winding: i64,
    pub origin_relative: f64,
    pub origin_tol: f64,
    pub big_radius: f64,
    pub small_radius: f64,
    pub points: usize,
    pub notes: Vec<String>,
}

impl EvansSummary {
    pub fn of(r: &EvansContourResult) -> EvansSummary {
        EvansSummary {
            verdict: r.verdict,
            excised_winding: r.excised.winding,
            small_circle_winding: r.small_circle.winding,
            origin_relative: r.origin_relative,
            origin_tol: r.origin_tol,
            big_radius: r.big_radius,
            small_radius: r.small_radius,
            points: r.excised.n_points + r.small_circle.n_points,
            notes: r.notes.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub halfwidth: f64,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub t_final: f64,
    pub epsilon: f64,
    pub ledger: ConservationLedger,
    pub ledger_tol: f64,
    pub final_deviation: f64,
    pub boundary_activity_max: f64,
}

impl SimulationSummary {
    pub fn of(run: &SimulationRun) -> SimulationSummary {
        SimulationSummary {
            halfwidth: run.halfwidth,
            h: run.h,
            dt: run.dt,
            steps: run.steps,
            t_final: *run.times.last().unwrap_or(&0.0),
            epsilon: run.epsilon,
            ledger: run.ledger.clone(),
            ledger_tol: LEDGER_TOL,
            final_deviation: run.final_deviation,
            boundary_activity_max: run.boundary_activity.iter().fold(0.0, |m, v| m.max(*v)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StationSummary {
    pub x: f64,
    pub value: f64,
    pub ratio_half: f64,
    pub ratio_tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisSummary {
    pub exponents: Vec<DecayEntry>,
    pub zeta_final: f64,
    pub zeta_ratio_half: f64,
    pub zeta_ratio_tol: f64,
    pub vertical: Vec<StationSummary>,
    pub vertical_grid_sup_final: f64,
    pub damping: DampingReport,
    pub delta_sup: f64,
    pub deltadot_weighted_sup: f64,
    pub max_phase_discrepancy: f64,
    pub max_picard_sweeps: usize,
}

impl AnalysisSummary {
    pub fn of(d: &Diagnostics) -> AnalysisSummary {
        AnalysisSummary {
            exponents: d.exponents.clone(),
            zeta_final: *d.zeta.zeta.last().unwrap_or(&0.0),
            zeta_ratio_half: d.zeta_ratio,
            zeta_ratio_tol: ZETA_RATIO_TOL,
            vertical: d
                .zeta
                .vertical
                .iter()
                .zip(&d.vertical_ratio)
                .map(|(v, (_, r))| StationSummary {
                    x: v.x,
                    value: *v.values.last().unwrap_or(&0.0),
                    ratio_half: *r,
                    ratio_tol: VERTICAL_RATIO_TOL,
                })
                .collect(),
            vertical_grid_sup_final: *d.zeta.vertical_grid_sup.last().unwrap_or(&0.0),
            damping: d.damping.clone(),
            delta_sup: d.phase.delta_sup,
            deltadot_weighted_sup: d.phase.deltadot_weighted_sup,
            max_phase_discrepancy: d.phase.max_discrepancy,
            max_picard_sweeps: d.phase.iterations.iter().copied().max().unwrap_or(0),
        }
    }
}

/// One checked claim with the tolerance it was checked against.
#[derive(Debug, Clone, Serialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Gate {
    fn below(name: impl Into<String>, value: f64, limit: f64) -> Gate {
        Gate { name: name.into(), value, target: limit, tolerance: 0.0, pass: value < limit }
    }
    fn near(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Gate {
        Gate { name: name.into(), value, target, tolerance, pass: (value - target).abs() <= tolerance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Complete,
    Refused,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub stage: Stage,
    pub message: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub model: String,
    pub provenance: Provenance,
    pub status: Status,
    pub failure: Option<Failure>,
    pub classification: Option<Classification>,
    pub profile: Option<ProfileSummary>,
    pub assumptions: Option<AssumptionReport>,
    pub evans: Option<EvansSummary>,
    pub evans_forced: bool,
    pub simulation: Option<SimulationSummary>,
    pub analysis: Option<AnalysisSummary>,
    pub gates: Vec<Gate>,
    pub skipped: Vec<String>,
}

impl ExperimentReport {
    fn new(config: &ExperimentConfig) -> ExperimentReport {
        ExperimentReport {
            name: config.label(),
            model: config.model.name.clone(),
            provenance: Provenance::of(config),
            status: Status::Complete,
            failure: None,
            classification: None,
            profile: None,
            assumptions: None,
            evans: None,
            evans_forced: false,
            simulation: None,
            analysis: None,
            gates: Vec::new(),
            skipped: Vec::new(),
        }
    }

    /// 0 when complete, otherwise the failure's code.
    pub fn exit_code(&self) -> i32 {
        self.failure.as_ref().map_or(0, |f| f.exit_code)
    }

    fn fail(&mut self, e: &StageError) {
        self.status = if e.exit_code() == 2 { Status::Refused } else { Status::Failed };
        self.failure = Some(Failure { stage: e.stage, message: e.source.to_string(), exit_code: e.exit_code() });
    }
}

/// Model, endstate classification and profile with its characteristic data.
pub struct Prepared {
    pub model: FluxViscositySystem,
    pub classification: Classification,
    pub profile: ShockProfile,
    pub characteristics: CharacteristicData,
}

/// Classifies the endstates and refuses overcompressive shocks before any
/// profile is computed.
pub fn classify(config: &ExperimentConfig, model: &FluxViscositySystem) -> StageResult<Classification> {
    let (um, up) = (config.u_minus(), config.u_plus());
    let ends = endstate_characteristics(model, &um, &up).stage(Stage::Classify)?;
    let (s, res) = rankine_hugoniot_speed(model, &um, &up);
    let c = Classification {
        shock_type: ends.shock_type,
        gamma: ends.shock_type.gamma(),
        i_minus: ends.i_minus,
        i_plus: ends.i_plus,
        a_minus: ends.a_minus.clone(),
        a_plus: ends.a_plus.clone(),
        beta_minus: ends.beta_minus.clone(),
        beta_plus: ends.beta_plus.clone(),
        rh_speed: s,
        rh_residual: res,
    };
    Ok(c)
}

fn refuse_unsupported(c: &Classification) -> StageResult<()> {
    if c.shock_type.supported() {
        Ok(())
    } else {
        Err(StageError {
            stage: Stage::Classify,
            source: Error::Unsupported(format!("overcompressive unsupported (i+ = {} >= i- + 2 = {})", c.i_plus, c.i_minus + 2)),
        })
    }
}

/// Model lookup, classification and profile solve.
pub fn prepare(config: &ExperimentConfig) -> StageResult<Prepared> {
    config.validate().stage(Stage::Config)?;
    let model = config.build_model().stage(Stage::Config)?;
    let classification = classify(config, &model)?;
    prepare_classified(config, model, classification)
}

fn prepare_classified(config: &ExperimentConfig, model: FluxViscositySystem, classification: Classification) -> StageResult<Prepared> {
    refuse_unsupported(&classification)?;
    let profile = solve_profile(&model, &config.u_minus(), &config.u_plus(), &config.profile.settings()).stage(Stage::Profile)?;
    let characteristics = characteristic_data(&model, &profile).stage(Stage::Profile)?;
    Ok(Prepared { model, classification, profile, characteristics })
}

impl Prepared {
    pub fn profile_summary(&self, config: &ExperimentConfig) -> ProfileSummary {
        let p = &self.profile;
        ProfileSummary {
            halfwidth: p.halfwidth,
            h: p.h,
            nodes: p.len(),
            residual: p.residual,
            residual_tol: config.profile.tol_profile,
            endstate_error: p.endstate_error,
            endstate_tol: config.profile.tol_endstate,
            tail_rate: p.tail_rate(),
            biorthogonality_error: self.characteristics.biorthogonality_error,
        }
    }

    pub fn assumptions(&self) -> StageResult<AssumptionReport> {
        check_assumptions(&self.model, &self.profile.u_minus, &self.profile.u_plus).stage(Stage::Assumptions)
    }

    pub fn evans(&self, config: &ExperimentConfig) -> StageResult<EvansContourResult> {
        let e = &config.evans;
        let ev = Evans::new(&self.model, &self.profile, e.evans()).stage(Stage::Evans)?;
        verify_condition_d(&ev, e.big_radius, e.small_radius, &e.winding()).stage(Stage::Evans)
    }

    pub fn kernel(&self) -> StageResult<KernelE> {
        KernelE::from_characteristics(&self.characteristics, &self.profile, LMode::Auto).stage(Stage::Analyze)
    }

    pub fn simulate(&self, config: &ExperimentConfig) -> StageResult<SimulationRun> {
        run_simulation(&self.model, &self.profile, &config.simulation).stage(Stage::Simulate)
    }

    pub fn analyze(&self, config: &ExperimentConfig, run: &SimulationRun) -> StageResult<Diagnostics> {
        let kernel = self.kernel()?;
        analyze(&self.model, run, &kernel, &config.analysis).stage(Stage::Analyze)
    }
}

/// Acceptance-style gates that a single run can decide.
pub fn run_gates(run: &SimulationRun, d: &Diagnostics, drift_tol: f64) -> Vec<Gate> {
    let mut g = vec![Gate::below("ledger_residual_per_time", run.ledger.residual_per_time, LEDGER_TOL)];
    for e in &d.exponents {
        let value = e.fit.as_ref().map_or(f64::NAN, |f| f.exponent);
        g.push(Gate { pass: e.pass, ..Gate::near(format!("exponent_{}", e.name), value, e.target, e.tolerance) });
    }
    g.push(Gate::below("zeta_ratio_half", d.zeta_ratio, ZETA_RATIO_TOL));
    for (x, r) in &d.vertical_ratio {
        g.push(Gate::below(format!("vertical_ratio_half@{x}"), *r, VERTICAL_RATIO_TOL));
    }
    g.push(Gate {
        name: "damping_drift".into(),
        value: d.damping.drift,
        target: 0.0,
        tolerance: drift_tol,
        pass: d.damping.pass,
    });
    g
}

/// Where each stage writes inside the output directory.
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Layout {
        Layout { root: root.to_path_buf() }
    }
    pub fn report(&self) -> PathBuf {
        self.root.join("report.json")
    }
    pub fn profile(&self) -> PathBuf {
        self.root.join("profile.csv")
    }
    pub fn run_dir(&self) -> PathBuf {
        self.root.join("run")
    }
    pub fn series(&self) -> PathBuf {
        self.root.join("series.csv")
    }
    pub fn diag_json(&self) -> PathBuf {
        self.root.join("diag.json")
    }
    pub fn diag_csv(&self) -> PathBuf {
        self.root.join("diag.csv")
    }
    pub fn plotdata(&self) -> PathBuf {
        self.root.join("plotdata")
    }
}

fn stages(config: &ExperimentConfig, out: &Path, force: bool, report: &mut ExperimentReport) -> StageResult<()> {
    let layout = Layout::new(out);
    std::fs::create_dir_all(out).stage(Stage::Output)?;
    config.validate().stage(Stage::Config)?;
    let model = config.build_model().stage(Stage::Config)?;
    let classification = classify(config, &model)?;
    report.classification = Some(classification.clone());
    info!("{:?} shock, i- = {}, i+ = {}", classification.shock_type, classification.i_minus, classification.i_plus);
    let prepared = prepare_classified(config, model, classification)?;
    report.profile = Some(prepared.profile_summary(config));
    write_profile(&layout.profile(), &prepared.profile).stage(Stage::Output)?;
    report.assumptions = Some(prepared.assumptions()?);
    let p = &prepared.profile;
    report.gates.push(Gate::below("profile_residual", p.residual, config.profile.tol_profile * (1.0 + 1e-12)));

    if config.evans.enabled {
        let ev = prepared.evans(config)?;
        emit_evans_plot(&layout.plotdata(), &ev).stage(Stage::Output)?;
        let summary = EvansSummary::of(&ev);
        report.gates.push(Gate {
            name: "evans_condition_d".into(),
            value: if ev.verdict == Verdict::Pass { 1.0 } else { 0.0 },
            target: 1.0,
            tolerance: 0.0,
            pass: ev.verdict == Verdict::Pass,
        });
        report.evans = Some(summary);
        if ev.verdict != Verdict::Pass {
            if force {
                warn!("Evans verdict {:?}; continuing because of --force", ev.verdict);
                report.evans_forced = true;
            } else {
                report.skipped.push("simulation and analysis skipped: Evans condition not verified".into());
                return Err(StageError {
                    stage: Stage::Evans,
                    source: Error::Gate(format!("Evans verdict {:?}: {}", ev.verdict, ev.notes.join("; "))),
                });
            }
        }
    } else {
        report.skipped.push("Evans check disabled in the configuration".into());
    }

    let run = prepared.simulate(config)?;
    report.simulation = Some(SimulationSummary::of(&run));
    save_run(&layout.run_dir(), config, &run).stage(Stage::Output)?;
    write_series(&layout.series(), &run).stage(Stage::Output)?;

    let diag = prepared.analyze(config, &run)?;
    report.analysis = Some(AnalysisSummary::of(&diag));
    report.gates.extend(run_gates(&run, &diag, config.analysis.damping_drift_tol));
    write_json(&layout.diag_json(), &AnalysisSummary::of(&diag)).stage(Stage::Output)?;
    write_diagnostics_csv(&layout.diag_csv(), &diag).stage(Stage::Output)?;
    emit_plotdata(&layout.plotdata(), &[PlotRun { label: "", run: &run, diag: &diag }], config.analysis.fit_start)
        .stage(Stage::Output)?;
    Ok(())
}

/// Runs every stage, writing artifacts under `out` as they become
/// available. The report is written in all cases and records the stage
/// that stopped the pipeline.
pub fn run_experiment(config: &ExperimentConfig, out: &Path, force: bool) -> ExperimentReport {
    let mut report = ExperimentReport::new(config);
    if let Err(e) = stages(config, out, force, &mut report) {
        warn!("{e}");
        report.fail(&e);
    }
    if let Err(e) = write_json(&Layout::new(out).report(), &report) {
        let e = StageError { stage: Stage::Output, source: e };
        report.fail(&e);
    }
    report
}
