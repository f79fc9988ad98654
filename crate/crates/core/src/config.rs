//! Run configuration: a flat TOML file whose fields all default per system.
//!
//! Precedence when merging is command-line flags, then the file, then the
//! built-in defaults for the chosen system.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::{QuantumEnvConfig, RewardForm, SystemSpec};
use crate::error::{Error, Result};
use crate::meanfield::MeanFieldConfig;
use crate::rl::{InitMode, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Meanfield,
    Quantum,
}

impl std::str::FromStr for SystemKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "meanfield" => Ok(SystemKind::Meanfield),
            "quantum" => Ok(SystemKind::Quantum),
            other => Err(format!("unknown system `{other}` (expected meanfield|quantum)")),
        }
    }
}

/// Partial configuration as written in a file or assembled from flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub system: Option<SystemKind>,
    pub n_atoms: Option<usize>,
    pub c2: Option<f64>,
    pub q_min: Option<f64>,
    pub q_max: Option<f64>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub substeps: Option<usize>,
    pub reward: Option<RewardForm>,
    pub init: Option<InitMode>,
    pub hidden_sizes: Option<Vec<usize>>,
    pub gamma: Option<f64>,
    pub gae_lambda: Option<f64>,
    pub lr_actor: Option<f64>,
    pub lr_critic: Option<f64>,
    pub target_kl: Option<f64>,
    pub clip_ratio: Option<f64>,
    pub epochs_per_update: Option<usize>,
    pub episodes_per_epoch: Option<usize>,
    pub total_epochs: Option<usize>,
    pub seed: Option<u64>,
}

macro_rules! overlay {
    ($base:expr, $over:expr, $($f:ident),*) => {
        ConfigFile { $($f: $over.$f.or($base.$f)),* }
    };
}

impl ConfigFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Toml(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Toml(e.to_string()))
    }

    /// Fields set in `over` win.
    pub fn merged(&self, over: &ConfigFile) -> ConfigFile {
        let base = self.clone();
        let over = over.clone();
        overlay!(
            base, over, system, n_atoms, c2, q_min, q_max, dt, steps, substeps, reward, init, hidden_sizes, gamma,
            gae_lambda, lr_actor, lr_critic, target_kl, clip_ratio, epochs_per_update, episodes_per_epoch,
            total_epochs, seed
        )
    }

    /// Fills defaults for the chosen system and validates every field.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let kind = self.system.ok_or_else(|| Error::config("system", "missing (expected meanfield|quantum)"))?;
        let system = match kind {
            SystemKind::Meanfield => {
                if self.n_atoms.is_some() {
                    return Err(Error::config("n_atoms", "only applies to the quantum system"));
                }
                let d = MeanFieldConfig::default();
                let dynamics = MeanFieldConfig {
                    c2: self.c2.unwrap_or(d.c2),
                    q_min: self.q_min.unwrap_or(d.q_min),
                    q_max: self.q_max.unwrap_or(d.q_max),
                    dt: self.dt.unwrap_or(d.dt),
                    steps_per_episode: self.steps.unwrap_or(d.steps_per_episode),
                    substeps: self.substeps.unwrap_or(d.substeps),
                };
                SystemSpec::Meanfield { dynamics, reward: self.reward.unwrap_or(RewardForm::Log) }
            }
            SystemKind::Quantum => {
                if self.substeps.is_some() {
                    return Err(Error::config("substeps", "only applies to the mean-field system"));
                }
                let n = self.n_atoms.ok_or_else(|| Error::config("n_atoms", "required for the quantum system"))?;
                let d = QuantumEnvConfig::with_atoms(n);
                SystemSpec::Quantum(QuantumEnvConfig {
                    n_atoms: n,
                    c2: self.c2.unwrap_or(d.c2),
                    q_min: self.q_min.unwrap_or(d.q_min),
                    q_max: self.q_max.unwrap_or(d.q_max),
                    dt: self.dt.unwrap_or(d.dt),
                    steps_per_episode: self.steps.unwrap_or(d.steps_per_episode),
                    reward: self.reward.unwrap_or(d.reward),
                })
            }
        };
        system.validate()?;
        let d = match system {
            SystemSpec::Meanfield { .. } => TrainConfig::meanfield(),
            SystemSpec::Quantum(c) => TrainConfig::quantum(c.n_atoms),
        };
        let train = TrainConfig {
            hidden_sizes: self.hidden_sizes.clone().unwrap_or(d.hidden_sizes),
            gamma: self.gamma.unwrap_or(d.gamma),
            gae_lambda: self.gae_lambda.unwrap_or(d.gae_lambda),
            lr_actor: self.lr_actor.unwrap_or(d.lr_actor),
            lr_critic: self.lr_critic.unwrap_or(d.lr_critic),
            target_kl: self.target_kl.unwrap_or(d.target_kl),
            clip_ratio: self.clip_ratio.unwrap_or(d.clip_ratio),
            epochs_per_update: self.epochs_per_update.unwrap_or(d.epochs_per_update),
            episodes_per_epoch: self.episodes_per_epoch.unwrap_or(d.episodes_per_epoch),
            total_epochs: self.total_epochs.unwrap_or(d.total_epochs),
            seed: self.seed.unwrap_or(d.seed),
        };
        train.validate()?;
        Ok(ResolvedConfig { system, init: self.init.unwrap_or(InitMode::Fixed), train })
    }
}

/// A fully specified, validated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub system: SystemSpec,
    pub init: InitMode,
    pub train: TrainConfig,
}

impl ResolvedConfig {
    /// Every field spelled out, so that re-loading it reproduces this configuration.
    pub fn to_file(&self) -> ConfigFile {
        let t = &self.train;
        let mut f = ConfigFile {
            init: Some(self.init),
            hidden_sizes: Some(t.hidden_sizes.clone()),
            gamma: Some(t.gamma),
            gae_lambda: Some(t.gae_lambda),
            lr_actor: Some(t.lr_actor),
            lr_critic: Some(t.lr_critic),
            target_kl: Some(t.target_kl),
            clip_ratio: Some(t.clip_ratio),
            epochs_per_update: Some(t.epochs_per_update),
            episodes_per_epoch: Some(t.episodes_per_epoch),
            total_epochs: Some(t.total_epochs),
            seed: Some(t.seed),
            ..ConfigFile::default()
        };
        match self.system {
            SystemSpec::Meanfield { dynamics: d, reward } => {
                f.system = Some(SystemKind::Meanfield);
                (f.c2, f.q_min, f.q_max, f.dt) = (Some(d.c2), Some(d.q_min), Some(d.q_max), Some(d.dt));
                (f.steps, f.substeps, f.reward) = (Some(d.steps_per_episode), Some(d.substeps), Some(reward));
            }
            SystemSpec::Quantum(c) => {
                f.system = Some(SystemKind::Quantum);
                f.n_atoms = Some(c.n_atoms);
                (f.c2, f.q_min, f.q_max, f.dt) = (Some(c.c2), Some(c.q_min), Some(c.q_max), Some(c.dt));
                (f.steps, f.reward) = (Some(c.steps_per_episode), Some(c.reward));
            }
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(r: Result<ResolvedConfig>) -> String {
        match r {
            Err(Error::InvalidConfig { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn meanfield_defaults() {
        let c = ConfigFile::from_toml("system = \"meanfield\"").unwrap().resolve().unwrap();
        assert_eq!(c.train.hidden_sizes, vec![32, 16]);
        assert_eq!(c.train.total_epochs, 200);
        match c.system {
            SystemSpec::Meanfield { dynamics, reward } => {
                assert_eq!((dynamics.dt, dynamics.steps_per_episode), (0.05, 100));
                assert_eq!(reward, RewardForm::Log);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn quantum_defaults() {
        let c = ConfigFile::from_toml("system = \"quantum\"\nn_atoms = 10\ninit = \"random\"").unwrap().resolve().unwrap();
        assert_eq!(c.train.hidden_sizes, vec![64, 32]);
        assert_eq!(c.train.total_epochs, 1000);
        assert_eq!(c.init, InitMode::Random);
        assert_eq!(c.system, SystemSpec::Quantum(QuantumEnvConfig::with_atoms(10)));
    }

    #[test]
    fn overrides_take_precedence() {
        let file = ConfigFile::from_toml("system = \"quantum\"\nn_atoms = 4\nseed = 3\ngamma = 0.9").unwrap();
        let flags = ConfigFile { seed: Some(7), ..Default::default() };
        let c = file.merged(&flags).resolve().unwrap();
        assert_eq!(c.train.seed, 7);
        assert_eq!(c.train.gamma, 0.9);
    }

    #[test]
    fn invalid_fields_are_named() {
        let base = ConfigFile { system: Some(SystemKind::Quantum), n_atoms: Some(10), ..Default::default() };
        let cases: Vec<(ConfigFile, &str)> = vec![
            (ConfigFile { n_atoms: Some(7), ..base.clone() }, "n_atoms"),
            (ConfigFile { n_atoms: None, ..base.clone() }, "n_atoms"),
            (ConfigFile { dt: Some(-0.1), ..base.clone() }, "dt"),
            (ConfigFile { q_min: Some(7.0), ..base.clone() }, "q_min"),
            (ConfigFile { steps: Some(0), ..base.clone() }, "steps"),
            (ConfigFile { gamma: Some(1.2), ..base.clone() }, "gamma"),
            (ConfigFile { gae_lambda: Some(-0.1), ..base.clone() }, "gae_lambda"),
            (ConfigFile { lr_actor: Some(0.0), ..base.clone() }, "lr_actor"),
            (ConfigFile { lr_critic: Some(f64::NAN), ..base.clone() }, "lr_critic"),
            (ConfigFile { target_kl: Some(-1.0), ..base.clone() }, "target_kl"),
            (ConfigFile { clip_ratio: Some(1.5), ..base.clone() }, "clip_ratio"),
            (ConfigFile { hidden_sizes: Some(vec![]), ..base.clone() }, "hidden_sizes"),
            (ConfigFile { episodes_per_epoch: Some(0), ..base.clone() }, "episodes_per_epoch"),
            (ConfigFile { total_epochs: Some(0), ..base.clone() }, "total_epochs"),
            (ConfigFile { epochs_per_update: Some(0), ..base.clone() }, "epochs_per_update"),
            (ConfigFile { substeps: Some(3), ..base.clone() }, "substeps"),
            (ConfigFile { system: None, ..base.clone() }, "system"),
            (ConfigFile { system: Some(SystemKind::Meanfield), n_atoms: None, c2: Some(0.5), ..base.clone() }, "c2"),
            (ConfigFile { system: Some(SystemKind::Meanfield), n_atoms: None, substeps: Some(0), ..base.clone() }, "substeps"),
        ];
        for (cfg, field) in cases {
            assert_eq!(field_of(cfg.resolve()), field, "{cfg:?}");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ConfigFile::from_toml("system = \"quantum\"\nbogus = 1").is_err());
    }

    #[test]
    fn resolved_round_trip() {
        for text in ["system = \"meanfield\"\nseed = 5", "system = \"quantum\"\nn_atoms = 6\nreward = \"delta\""] {
            let c = ConfigFile::from_toml(text).unwrap().resolve().unwrap();
            let echoed = c.to_file().to_toml().unwrap();
            assert_eq!(ConfigFile::from_toml(&echoed).unwrap().resolve().unwrap(), c);
        }
    }
}
