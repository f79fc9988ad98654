//! Episodic MDP wrappers around both dynamical systems.
//!
//! An episode holds `q` constant over each control interval `dt`, for a fixed
//! number of steps. There is no early termination at the target.

mod meanfield;
mod quantum;
mod reward;

pub use meanfield::MeanFieldEnv;
pub use quantum::{QuantumEnv, QuantumEnvConfig};
pub use reward::{meanfield_progress, reward_delta, reward_log, RewardForm, INFIDELITY_FLOOR};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::meanfield::wrap_angle;

/// Number of policy input features.
pub const OBS_DIM: usize = 3;

/// Policy input `(rho0, cos theta_s, sin theta_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub features: [f64; OBS_DIM],
}

impl Observation {
    pub fn from_phase(rho0: f64, theta_s: f64) -> Self {
        Observation { features: [rho0, theta_s.cos(), theta_s.sin()] }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.features
    }

    pub fn rho0(&self) -> f64 {
        self.features[0]
    }

    pub fn theta_s(&self) -> f64 {
        wrap_angle(self.features[2].atan2(self.features[1]))
    }
}

/// Physical readout after a step (or at reset).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub rho0: f64,
    pub theta_s: f64,
    /// Target fidelity; `1 - rho0` for the mean-field system.
    pub fidelity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub obs: Observation,
    pub reward: f64,
    pub done: bool,
    /// Control actually applied (after clipping).
    pub q: f64,
    pub info: StepInfo,
}

/// How an episode starts.
#[derive(Debug, Clone, PartialEq)]
pub enum Init<S> {
    Fixed,
    Random,
    Explicit(S),
}

pub trait Environment: Clone + Send + Sync {
    type State: Clone + Send + Sync + std::fmt::Debug;

    fn q_bounds(&self) -> (f64, f64);
    fn dt(&self) -> f64;
    fn steps_per_episode(&self) -> usize;

    fn reset<R: Rng + ?Sized>(&mut self, init: &Init<Self::State>, rng: &mut R) -> Result<Observation>;

    /// Holds `q` (clipped to the bounds) for one control interval.
    fn step(&mut self, q: f64) -> Result<StepResult>;

    /// Advances one interval under a state-feedback law.
    ///
    /// The default evaluates the law once and holds it; systems that can
    /// integrate the closed loop override this.
    fn step_feedback(&mut self, law: &dyn Fn(&Self::State) -> f64) -> Result<StepResult> {
        let q = law(self.state());
        self.step(q)
    }

    fn state(&self) -> &Self::State;
    fn observation(&self) -> Observation;
    fn info(&self) -> StepInfo;
    fn steps_taken(&self) -> usize;

    fn is_done(&self) -> bool {
        self.steps_taken() >= self.steps_per_episode()
    }

    fn horizon(&self) -> f64 {
        self.dt() * self.steps_per_episode() as f64
    }

    fn clip_q(&self, q: f64) -> f64 {
        let (lo, hi) = self.q_bounds();
        q.clamp(lo, hi)
    }
}

/// Serializable description of which system an agent was trained on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "lowercase")]
pub enum SystemSpec {
    Meanfield { dynamics: crate::meanfield::MeanFieldConfig, reward: RewardForm },
    Quantum(QuantumEnvConfig),
}

impl SystemSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SystemSpec::Meanfield { dynamics, .. } => dynamics.validate(),
            SystemSpec::Quantum(c) => c.validate(),
        }
    }

    pub fn q_bounds(&self) -> (f64, f64) {
        match self {
            SystemSpec::Meanfield { dynamics, .. } => (dynamics.q_min, dynamics.q_max),
            SystemSpec::Quantum(c) => (c.q_min, c.q_max),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SystemSpec::Meanfield { .. } => "meanfield",
            SystemSpec::Quantum(_) => "quantum",
        }
    }
}
