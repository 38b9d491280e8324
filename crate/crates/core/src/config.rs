//! JSON run configuration shared by every command.
//!
//! Only `harvest` is required; every other section falls back to the
//! reference device (4.7 mF, 1.8-3.3 V, 50 x 20 ms, 30 levels), the basic
//! reward, default solver tolerances, a 2000 s horizon with 20 replications
//! from seed 0, and output to `out/` in both formats. Unknown keys anywhere
//! are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::energy_model::{DeviceParams, HarvestModel};
use crate::error::ModelError;
use crate::lp::SimplexOptions;
use crate::mdp::{BuildOptions, MdpModel, RewardConfig};
use crate::simulator::{Scheduler, SimConfig, SimMode};
use crate::solver::{RviOptions, SolveOptions};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    /// serde_json messages carry the line and column of the offending token.
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Invalid(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub build: BuildOptions,
    pub simplex: SimplexOptions,
    pub rvi: RviOptions,
    /// Occupation mass below which a state counts as unvisited (1e-9).
    pub mass_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub horizon_seconds: f64,
    pub seed: u64,
    /// `null` starts at `v_max`.
    pub initial_voltage: Option<f64>,
    pub replications: usize,
    pub mode: SimMode,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            horizon_seconds: 2000.0,
            seed: 0,
            initial_voltage: None,
            replications: 20,
            mode: SimMode::Physical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            formats: vec![Format::Json, Format::Csv],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub device: DeviceParams,
    pub harvest: HarvestModel,
    #[serde(default)]
    pub reward: RewardConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    /// Reference device with the given harvest law, everything else default.
    pub fn with_harvest(harvest: HarvestModel) -> Self {
        RunConfig {
            device: DeviceParams::reference(),
            harvest,
            reward: RewardConfig::default(),
            solver: SolverSection::default(),
            sim: SimSection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text).map_err(|e| match e {
            ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.device.validate()?;
        self.harvest.validate()?;
        self.reward.validate()?;
        if self.sim.replications == 0 {
            return Err(ModelError::InvalidParam {
                field: "sim.replications",
                reason: "must be at least 1".into(),
            });
        }
        self.sim_config(Scheduler::Alap).validate()
    }

    /// Hex SHA-256 of the canonical JSON form, without the `output`
    /// section: where results are written does not change them.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        value.as_object_mut().expect("config is an object").remove("output");
        let json = serde_json::to_string(&value).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn build_model(&self) -> Result<MdpModel, ModelError> {
        MdpModel::build(&self.device, &self.harvest, self.reward, self.solver.build)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            simplex: self.solver.simplex,
            rvi: self.solver.rvi,
            mass_tol: self.solver.mass_tol,
        }
    }

    pub fn sim_config(&self, scheduler: Scheduler) -> SimConfig {
        SimConfig {
            params: self.device.clone(),
            harvest: self.harvest.clone(),
            scheduler,
            horizon_seconds: self.sim.horizon_seconds,
            master_seed: self.sim.seed,
            initial_voltage: self.sim.initial_voltage,
            mode: self.sim.mode,
        }
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_reference_defaults() {
        let cfg = RunConfig::from_json(r#"{"harvest": {"kind": "uniform", "lo": 0, "hi": 0.003}}"#).unwrap();
        assert_eq!(cfg.device, DeviceParams::reference());
        assert_eq!(cfg.sim.horizon_seconds, 2000.0);
        assert_eq!(cfg.sim.replications, 20);
    }

    #[test]
    fn missing_harvest_is_rejected() {
        let err = RunConfig::from_json(r#"{"device": {}}"#).unwrap_err();
        assert!(err.to_string().contains("harvest"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let text = "{\n  \"harvest\": {\"kind\": \"uniform\", \"lo\": 0, \"hi\": 0.003},\n  \"sim\": {\"horizon\": 10}\n}";
        let err = RunConfig::from_json(text).unwrap_err().to_string();
        assert!(err.contains("horizon") && err.contains("line 3"), "{err}");
    }

    #[test]
    fn window_violation_is_a_validation_error() {
        let text = r#"{"device": {"sensing_deadline": 48}, "harvest": {"kind": "uniform", "lo": 0, "hi": 0.003}}"#;
        assert!(matches!(RunConfig::from_json(text), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::with_harvest(HarvestModel::uniform_ma(3.0));
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.output.dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.sim.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}
