//! Declarative experiment configuration.

use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::analysis::AnalysisSettings;
use crate::error::{Error, Result};
use crate::models::{by_name, FluxViscositySystem};
use crate::profile::ProfileSettings;
use crate::sim::SimulationConfig;
use crate::spectral::{EvansSettings, WindingSettings};

/// Schema version accepted by this build.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    #[serde(default)]
    pub params: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endstates {
    pub minus: Vec<f64>,
    pub plus: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    pub halfwidth: f64,
    pub h: f64,
    pub tol_profile: f64,
    pub tol_endstate: f64,
    pub adaptive: bool,
    pub max_halfwidth: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        let s = ProfileSettings::default();
        ProfileConfig {
            halfwidth: s.halfwidth,
            h: s.h,
            tol_profile: s.tol_profile,
            tol_endstate: s.tol_endstate,
            adaptive: s.adaptive,
            max_halfwidth: s.max_halfwidth,
        }
    }
}

impl ProfileConfig {
    pub fn settings(&self) -> ProfileSettings {
        ProfileSettings {
            halfwidth: self.halfwidth,
            h: self.h,
            tol_profile: self.tol_profile,
            tol_endstate: self.tol_endstate,
            adaptive: self.adaptive,
            max_halfwidth: self.max_halfwidth,
        }
    }
}

/// Contour `(R, rho)` and evaluation settings of the Evans check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvansConfig {
    pub enabled: bool,
    /// Outer radius `R`; `10 max |a|^2` when absent.
    pub big_radius: Option<f64>,
    /// Radius `rho` of the excised origin disk.
    pub small_radius: f64,
    pub max_arg_step: f64,
    pub guard_ratio: f64,
    pub max_points: usize,
    pub density: usize,
    pub rescale_threshold: f64,
    pub kato_step: f64,
}

impl Default for EvansConfig {
    fn default() -> Self {
        let w = WindingSettings::default();
        let e = EvansSettings::default();
        EvansConfig {
            enabled: true,
            big_radius: None,
            small_radius: 1e-3,
            max_arg_step: FRAC_PI_4,
            guard_ratio: w.guard_ratio,
            max_points: w.max_points,
            density: w.density,
            rescale_threshold: e.rescale_threshold,
            kato_step: e.kato_step,
        }
    }
}

impl EvansConfig {
    pub fn evans(&self) -> EvansSettings {
        EvansSettings { rescale_threshold: self.rescale_threshold, kato_step: self.kato_step }
    }
    pub fn winding(&self) -> WindingSettings {
        WindingSettings {
            max_arg_step: self.max_arg_step,
            guard_ratio: self.guard_ratio,
            max_points: self.max_points,
            density: self.density,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub format_version: u32,
    #[serde(default)]
    pub name: String,
    pub model: ModelSpec,
    pub endstates: Endstates,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub evans: EvansConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub analysis: AnalysisSettings,
    /// Output directory used when none is given on the command line.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(format!("`{name}` must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let c: ExperimentConfig = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => bad(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Checks everything that can be checked without numerics, including the
    /// model lookup and endstate dimensions.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(bad(format!("format_version {} is not supported (expected {FORMAT_VERSION})", self.format_version)));
        }
        let model = self.build_model()?;
        let n = model.n();
        for (side, v) in [("minus", &self.endstates.minus), ("plus", &self.endstates.plus)] {
            if v.len() != n {
                return Err(bad(format!("endstate `{side}` has {} components, model `{}` needs {n}", v.len(), model.name())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(bad(format!("endstate `{side}` is not finite")));
            }
        }
        let p = &self.profile;
        positive("profile.halfwidth", p.halfwidth)?;
        positive("profile.h", p.h)?;
        positive("profile.tol_profile", p.tol_profile)?;
        positive("profile.tol_endstate", p.tol_endstate)?;
        let e = &self.evans;
        positive("evans.small_radius", e.small_radius)?;
        if let Some(r) = e.big_radius {
            if !(r > e.small_radius) {
                return Err(bad("`evans.big_radius` must exceed `evans.small_radius`"));
            }
        }
        let s = &self.simulation;
        positive("simulation.halfwidth", s.halfwidth)?;
        positive("simulation.h", s.h)?;
        positive("simulation.t_final", s.t_final)?;
        positive("simulation.snapshot_interval", s.snapshot_interval)?;
        positive("simulation.smallness", s.smallness)?;
        if !(s.cfl > 0.0 && s.cfl <= 1.0) {
            return Err(bad("`simulation.cfl` must lie in (0, 1]"));
        }
        if let Some(dt) = s.dt {
            positive("simulation.dt", dt)?;
        }
        if !s.perturbation.amplitude.is_finite() || s.perturbation.amplitude < 0.0 {
            return Err(bad("`simulation.perturbation.amplitude` must be finite and non-negative"));
        }
        if let Some(d) = &s.perturbation.direction {
            if d.len() != n {
                return Err(bad(format!("perturbation direction has {} components, model needs {n}", d.len())));
            }
        }
        if s.probes.iter().any(|x| !x.is_finite()) {
            return Err(bad("probe stations must be finite"));
        }
        let a = &self.analysis;
        if !(a.fit_start > 0.0 && a.fit_start < 1.0) {
            return Err(bad("`analysis.fit_start` must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<FluxViscositySystem> {
        by_name(&self.model.name, &self.model.params).map_err(|e| match e {
            Error::Config(m) => bad(m),
            Error::UnknownModel(m) => bad(format!("unknown model `{m}`")),
            other => bad(other.to_string()),
        })
    }

    pub fn u_minus(&self) -> DVector<f64> {
        DVector::from_vec(self.endstates.minus.clone())
    }
    pub fn u_plus(&self) -> DVector<f64> {
        DVector::from_vec(self.endstates.plus.clone())
    }

    /// SHA-256 of the canonical JSON form, in hex.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Label used for output subdirectories.
    pub fn label(&self) -> String {
        if self.name.is_empty() {
            self.model.name.clone()
        } else {
            self.name.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"format_version": 1, "model": {"name": "burgers"}, "endstates": {"minus": [1], "plus": [-1]}}"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.simulation, SimulationConfig::default());
        assert_eq!(c.hash(), ExperimentConfig::from_json(MINIMAL).unwrap().hash());
    }

    #[test]
    fn rejections() {
        let unknown = MINIMAL.replace("\"model\"", "\"colour\": 1, \"model\"");
        assert!(matches!(ExperimentConfig::from_json(&unknown), Err(Error::Config(_))));
        let dims = MINIMAL.replace("[-1]", "[-1, 0]");
        assert!(matches!(ExperimentConfig::from_json(&dims), Err(Error::Config(_))));
        let model = MINIMAL.replace("burgers", "euler");
        assert!(matches!(ExperimentConfig::from_json(&model), Err(Error::Config(_))));
        let version = MINIMAL.replace("\"format_version\": 1", "\"format_version\": 7");
        assert!(matches!(ExperimentConfig::from_json(&version), Err(Error::Config(_))));
    }
}
