use std::path::Path;

use serde::{Deserialize, Serialize};

use super::policy::PolicyParams;
use super::train::{InitMode, TrainConfig};
use crate::env::{SystemSpec, OBS_DIM};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Trained parameters together with everything needed to reproduce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub system: SystemSpec,
    pub init: InitMode,
    pub train: TrainConfig,
    pub params: PolicyParams,
}

impl Checkpoint {
    pub fn new(system: SystemSpec, init: InitMode, train: TrainConfig, params: PolicyParams) -> Self {
        Checkpoint { version: CHECKPOINT_VERSION, system, init, train, params }
    }

    pub fn seed(&self) -> u64 {
        self.train.seed
    }

    pub fn check(&self) -> Result<()> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::IncompatibleCheckpoint(format!(
                "format version {} (this build reads {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        self.system.validate()?;
        self.params.check()?;
        if self.params.obs_dim() != OBS_DIM {
            return Err(Error::IncompatibleCheckpoint(format!("policy expects {} inputs", self.params.obs_dim())));
        }
        if (self.params.q_min, self.params.q_max) != self.system.q_bounds() {
            return Err(Error::IncompatibleCheckpoint("policy control range differs from the system's".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        ck.check()?;
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
