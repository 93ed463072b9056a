//! Run configuration, loaded from TOML. Every field has a desk-scale default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::synth::SynthConfig;
use crate::basenet::BaseNetConfig;
use crate::error::{MggError, Result};
use crate::fap::{FapConfig, DEFAULT_ETA};
use crate::metrics::EvalConfig;
use crate::spp::{SppConfig, SPP_REGRESSION_WEIGHT};
use crate::tba::TbaConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// `d_f`.
    pub feature_dim: usize,
    /// `d_p`.
    pub position_dim: usize,
    pub basenet: BaseNetConfig,
    pub spp: SppConfig,
    pub fap: FapConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            feature_dim: 16,
            position_dim: 32,
            basenet: BaseNetConfig::default(),
            spp: SppConfig::default(),
            fap: FapConfig::default(),
        }
    }
}

impl ModelConfig {
    /// Full-size widths: `d_h = 512`, `g = 32`, 512-channel pyramid.
    pub fn full_scale(feature_dim: usize) -> Self {
        ModelConfig {
            feature_dim,
            position_dim: 64,
            basenet: BaseNetConfig { hidden: 512, kernel: 5, rank: 32 },
            spp: SppConfig { channels: 512, ..SppConfig::default() },
            fap: FapConfig { hidden: 256, kernel: 3 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_dim == 0 {
            return Err(MggError::Config("feature_dim must be positive".into()));
        }
        if self.position_dim == 0 || self.position_dim % 2 != 0 {
            return Err(MggError::Config(format!("position_dim must be even and positive, got {}", self.position_dim)));
        }
        self.spp.pyramid.validate()
    }
}

/// Ablation switches. `spp_only` and `fap_only` select a single branch for
/// both training and inference and cannot be combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationFlags {
    pub disable_position: bool,
    pub disable_bilinear: bool,
    pub disable_lateral: bool,
    pub spp_only: bool,
    pub fap_only: bool,
}

impl AblationFlags {
    pub fn validate(&self) -> Result<()> {
        if self.spp_only && self.fap_only {
            return Err(MggError::Config("spp_only and fap_only are mutually exclusive".into()));
        }
        Ok(())
    }

    pub fn arch(&self) -> ArchFlags {
        ArchFlags {
            position: !self.disable_position,
            bilinear: !self.disable_bilinear,
            lateral: !self.disable_lateral,
        }
    }
}

/// The switches that change the parameter set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchFlags {
    pub position: bool,
    pub bilinear: bool,
    pub lateral: bool,
}

impl Default for ArchFlags {
    fn default() -> Self {
        ArchFlags { position: true, bilinear: true, lateral: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// `L_SPP + beta * L_FAP`.
    Joint,
    SppOnly,
    FapOnly,
}

impl Objective {
    pub fn from_flags(flags: &AblationFlags) -> Self {
        if flags.spp_only {
            Objective::SppOnly
        } else if flags.fap_only {
            Objective::FapOnly
        } else {
            Objective::Joint
        }
    }

    pub fn uses_spp(self) -> bool {
        self != Objective::FapOnly
    }

    pub fn uses_fap(self) -> bool {
        self != Objective::SppOnly
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Videos per update.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Weight of `L_FAP` in the joint loss.
    pub beta: f64,
    /// Weight of the SPP regression term.
    pub gamma: f64,
    pub eta: f64,
    /// Seeds initialization, shuffling and negative sampling.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 4,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            beta: 0.1,
            gamma: SPP_REGRESSION_WEIGHT,
            eta: DEFAULT_ETA,
            seed: 7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(MggError::Config("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(MggError::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.eta > 0.0) {
            return Err(MggError::Config(format!("eta must be positive, got {}", self.eta)));
        }
        Ok(())
    }
}

/// Everything one CLI invocation needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MggConfig {
    /// Training split generator; the validation split reuses it with
    /// `val_videos` videos and a derived seed.
    pub synth: SynthConfig,
    pub val_videos: usize,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub tba: TbaConfig,
    pub eval: EvalConfig,
    pub ablation: AblationFlags,
}

impl Default for MggConfig {
    fn default() -> Self {
        MggConfig {
            synth: SynthConfig::default(),
            val_videos: 50,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            tba: TbaConfig::default(),
            eval: EvalConfig::default(),
            ablation: AblationFlags::default(),
        }
    }
}

impl MggConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: MggConfig = toml::from_str(text).map_err(|e| MggError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| MggError::Config(e.to_string()))
    }

    /// One seed for data generation and training.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.synth.seed = seed;
        self.train.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.model.validate()?;
        self.train.validate()?;
        self.tba.validate()?;
        self.ablation.validate()?;
        if self.synth.feature_dim != self.model.feature_dim {
            return Err(MggError::Config(format!(
                "synth.feature_dim {} differs from model.feature_dim {}",
                self.synth.feature_dim, self.model.feature_dim
            )));
        }
        Ok(())
    }
}
