//! Experiment configuration file (TOML) and its content hash.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attacker::AttackerTrainSetup;
use crate::av::{AvTrainSetup, RewardParams};
use crate::error::{Error, Result};
use crate::rl::{OptimizerKind, TrainConfig};
use crate::sim::SimConfig;

/// Every group and key is optional; missing values take the defaults below.
/// Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Road geometry, vehicle dynamics, environment drivers, safety filter.
    pub sim: SimConfig,
    pub reward: RewardParams,
    /// AV training. Defaults to Adam at 1e-4 over 1e4 episodes, one update
    /// every two steps.
    pub av_train: TrainConfig,
    /// Attacker training. Defaults to the reference table values with Adam
    /// and 1e4 episodes.
    pub attacker_train: TrainConfig,
    /// Environment cars, excluding the AV and the attacker.
    pub n_env_cars: usize,
    pub with_attacker: bool,
    /// Apply the AV's one-step safety filter in training and evaluation.
    pub safety_check: bool,
    pub n_eval_episodes: usize,
    /// Base seed; training and evaluation streams are derived from it.
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// AV training: Adam at 1e-4 with one update every two environment steps.
pub fn default_av_train() -> TrainConfig {
    TrainConfig {
        optimizer: OptimizerKind::Adam,
        learning_rate: 1e-4,
        train_every: 2,
        episodes: 10_000,
        ..TrainConfig::default()
    }
}

/// Attacker training: Adam at the table learning rate of 1e-6.
pub fn default_attacker_train() -> TrainConfig {
    TrainConfig {
        optimizer: OptimizerKind::Adam,
        episodes: 10_000,
        ..TrainConfig::default()
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            reward: RewardParams::default(),
            av_train: default_av_train(),
            attacker_train: default_attacker_train(),
            n_env_cars: 10,
            with_attacker: false,
            safety_check: true,
            n_eval_episodes: 10_000,
            seed: 0,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Fields that identify an experiment. Car count, attacker presence and the
/// output directory vary between the rows of one report and stay out.
#[derive(Serialize)]
struct HashedFields<'a> {
    sim: &'a SimConfig,
    reward: &'a RewardParams,
    av_train: &'a TrainConfig,
    attacker_train: &'a TrainConfig,
    safety_check: bool,
    n_eval_episodes: usize,
    seed: u64,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.reward.validate()?;
        self.av_train.validate()?;
        self.attacker_train.validate()?;
        Ok(())
    }

    /// AV training setup; the top-level seed replaces the group's own.
    pub fn av_setup(&self) -> AvTrainSetup {
        AvTrainSetup {
            sim: self.sim,
            reward: self.reward,
            train: TrainConfig {
                seed: self.seed,
                ..self.av_train.clone()
            },
            n_env_cars: self.n_env_cars,
            safety_check: self.safety_check,
        }
    }

    /// Attacker training setup; the top-level seed replaces the group's own.
    pub fn attacker_setup(&self) -> AttackerTrainSetup {
        AttackerTrainSetup {
            sim: self.sim,
            reward: self.reward,
            train: TrainConfig {
                seed: self.seed,
                ..self.attacker_train.clone()
            },
            n_env_cars: self.n_env_cars,
        }
    }

    /// Hex SHA-256 of the identifying fields in canonical JSON.
    pub fn config_hash(&self) -> String {
        let fields = HashedFields {
            sim: &self.sim,
            reward: &self.reward,
            av_train: &self.av_train,
            attacker_train: &self.attacker_train,
            safety_check: self.safety_check,
            n_eval_episodes: self.n_eval_episodes,
            seed: self.seed,
        };
        let json = serde_json::to_vec(&fields).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(ExperimentConfig::from_toml_str("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn toml_round_trip() {
        let mut c = ExperimentConfig::default();
        c.n_env_cars = 15;
        c.sim.road.lane_width = 3.5;
        c.attacker_train.learning_rate = 1e-6;
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml_str("n_env_car = 10").is_err());
        assert!(ExperimentConfig::from_toml_str("[av_train]\nlr = 0.1").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(ExperimentConfig::from_toml_str("[av_train]\nbatch_size = 0").is_err());
    }

    #[test]
    fn partial_groups_keep_other_defaults() {
        let c = ExperimentConfig::from_toml_str("seed = 9\n[attacker_train]\nepisodes = 500\n").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.attacker_train.episodes, 500);
        assert_eq!(c.attacker_train.gamma, 0.9);
        assert_eq!(c.av_train, default_av_train());
    }

    #[test]
    fn hash_ignores_row_fields_only() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.n_env_cars = 20;
        b.with_attacker = true;
        b.out_dir = "elsewhere".into();
        assert_eq!(a.config_hash(), b.config_hash());
        b.seed = 1;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
    }
}
