//! Versioned JSON experiment configuration.

use irsbf_core::agent::{AgentConfig, TrainMode};
use irsbf_core::env::{ChannelMode, EpisodeConfig};
use irsbf_core::model::NetworkGeometry;
use irsbf_core::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default = "NetworkGeometry::desk_default")]
    pub geometry: NetworkGeometry,
    #[serde(default = "default_episode")]
    pub episode: EpisodeConfig,
    #[serde(default)]
    pub agent: AgentConfig,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub benchmark: Option<BenchmarkConfig>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
}

fn default_episode() -> EpisodeConfig {
    EpisodeConfig {
        t_window: 4,
        steps_per_episode: 200,
        channel_mode: ChannelMode::BlockHold { k: 10 },
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}

fn default_output_dir() -> String {
    "out".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    /// Total environment steps per (seed, mode) run.
    pub steps: usize,
    /// Which agent variants to train.
    pub modes: Vec<ModeName>,
    /// Relative duality-gap tolerance of the SDP backend used inside the
    /// training loop. Looser than the verification default: the model-based
    /// target only needs a few significant digits.
    pub sdp_rel_gap: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            steps: 20_000,
            modes: vec![ModeName::ModelFree, ModeName::OptimizationDriven],
            sdp_rel_gap: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    ModelFree,
    OptimizationDriven,
}

impl ModeName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModeName::ModelFree => "model_free",
            ModeName::OptimizationDriven => "optimization_driven",
        }
    }

    pub fn to_train_mode(self) -> TrainMode {
        match self {
            ModeName::ModelFree => TrainMode::ModelFree,
            ModeName::OptimizationDriven => TrainMode::OptimizationDriven,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    /// One of "gamma1", "N", "beta".
    pub parameter: String,
    pub values: Vec<f64>,
    /// Channel draws per value (common random numbers across values).
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Fixed power-splitting ratio for the optimizer-only sweep.
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// Relative uncertainty level used by the gamma1 and N sweeps; the beta
    /// sweep takes the level from its own value list.
    #[serde(default)]
    pub beta: f64,
    /// SDP backend duality-gap tolerance for the sweep solves.
    #[serde(default = "default_sweep_rel_gap")]
    pub sdp_rel_gap: f64,
}

fn default_sweep_rel_gap() -> f64 {
    1e-6
}

fn default_trials() -> usize {
    50
}

fn default_rho() -> f64 {
    0.6
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Gamma1,
    NElements,
    Beta,
}

impl SweepConfig {
    pub fn parameter(&self) -> Result<SweepParameter> {
        match self.parameter.as_str() {
            "gamma1" => Ok(SweepParameter::Gamma1),
            "N" => Ok(SweepParameter::NElements),
            "beta" => Ok(SweepParameter::Beta),
            other => Err(Error::InvalidArgument(format!(
                "unknown sweep parameter {other:?}: expected one of \"gamma1\", \"N\", \"beta\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    /// (M, N) pairs to time.
    pub sizes: Vec<(usize, usize)>,
    /// Timed trials per size (median reported).
    pub trials: usize,
    /// Leading trials discarded per size.
    pub warmup: usize,
    /// Hidden widths of the randomly initialized inference actor.
    pub hidden: Vec<usize>,
    /// Relative channel perturbation for the robust instances.
    pub noise_level: f64,
    /// SDP backend duality-gap tolerance for the timed solves.
    pub sdp_rel_gap: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            sizes: vec![(4, 10), (4, 15), (4, 20), (4, 25), (4, 50)],
            trials: 20,
            warmup: 3,
            hidden: vec![1024, 1024, 1024, 1024],
            noise_level: 0.01,
            sdp_rel_gap: 1e-4,
        }
    }
}

impl ExperimentConfig {
    pub fn default_desk() -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            geometry: NetworkGeometry::desk_default(),
            episode: default_episode(),
            agent: AgentConfig::default(),
            training: TrainingConfig::default(),
            sweep: None,
            benchmark: None,
            seeds: default_seeds(),
            output_dir: default_output_dir(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::InvalidArgument(format!(
                "config version {} unsupported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        self.geometry.validate()?;
        self.episode.validate()?;
        self.agent.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument("seed list must be nonempty".into()));
        }
        if self.training.steps == 0 {
            return Err(Error::InvalidArgument("training.steps must be >= 1".into()));
        }
        if !(self.training.sdp_rel_gap > 0.0 && self.training.sdp_rel_gap < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "training.sdp_rel_gap = {} outside (0, 1)",
                self.training.sdp_rel_gap
            )));
        }
        if let Some(sweep) = &self.sweep {
            sweep.parameter()?;
            if sweep.values.is_empty() {
                return Err(Error::InvalidArgument("sweep.values must be nonempty".into()));
            }
            if !(sweep.rho > 0.0 && sweep.rho < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "sweep.rho = {} outside (0, 1)",
                    sweep.rho
                )));
            }
            if sweep.beta < 0.0 {
                return Err(Error::InvalidArgument("sweep.beta must be >= 0".into()));
            }
        }
        if let Some(bench) = &self.benchmark {
            if bench.sizes.is_empty() || bench.trials == 0 {
                return Err(Error::InvalidArgument(
                    "benchmark.sizes and benchmark.trials must be nonempty".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| {
            Error::InvalidArgument(format!(
                "{}: line {}, column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })?;
        config.validate()?;
        Ok(config)
    }
}
