use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::reward::RewardForm;
use super::{Environment, Init, Observation, StepInfo, StepResult};
use crate::error::{Error, Result};
use crate::quantum::{FockVector, PropagatorCache, QuantumObservables, SpinSystem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumEnvConfig {
    pub n_atoms: usize,
    pub c2: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub dt: f64,
    pub steps_per_episode: usize,
    pub reward: RewardForm,
}

impl QuantumEnvConfig {
    /// `c2 = -1`, `q` in `[-6, 6]`, 200 steps of 0.1, log reward.
    pub fn with_atoms(n_atoms: usize) -> Self {
        QuantumEnvConfig { n_atoms, c2: -1.0, q_min: -6.0, q_max: 6.0, dt: 0.1, steps_per_episode: 200, reward: RewardForm::Log }
    }

    pub fn validate(&self) -> Result<()> {
        crate::quantum::validate_atom_number(self.n_atoms).map_err(|e| Error::config("n_atoms", e.to_string()))?;
        if !self.c2.is_finite() {
            return Err(Error::config("c2", "must be finite"));
        }
        if !(self.q_min < self.q_max) {
            return Err(Error::config("q_min", format!("q_min ({}) must be below q_max ({})", self.q_min, self.q_max)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::config("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.steps_per_episode == 0 {
            return Err(Error::config("steps", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct QuantumEnv {
    cfg: QuantumEnvConfig,
    system: SpinSystem,
    target: FockVector,
    psi: FockVector,
    obs: QuantumObservables,
    fidelity: f64,
    steps: usize,
    started: bool,
    cache: Option<Arc<PropagatorCache>>,
}

impl QuantumEnv {
    pub fn new(cfg: QuantumEnvConfig) -> Result<Self> {
        cfg.validate()?;
        let system = SpinSystem::new(cfg.n_atoms, cfg.c2)?;
        let target = FockVector::twin_fock(cfg.n_atoms)?;
        let psi = FockVector::polar(cfg.n_atoms)?;
        let obs = psi.observables();
        Ok(QuantumEnv { cfg, system, target, psi, obs, fidelity: 0.0, steps: 0, started: false, cache: None })
    }

    /// Reuses propagators for repeated `q` values (grid-based controllers).
    pub fn with_cache(mut self) -> Self {
        self.cache = Some(Arc::new(PropagatorCache::new(self.system, self.cfg.dt)));
        self
    }

    pub fn config(&self) -> &QuantumEnvConfig {
        &self.cfg
    }

    pub fn system(&self) -> SpinSystem {
        self.system
    }

    pub fn target(&self) -> &FockVector {
        &self.target
    }

    fn set_state(&mut self, psi: FockVector) {
        self.fidelity = psi.fidelity(&self.target).expect("same atom number");
        self.obs = psi.observables();
        self.psi = psi;
    }
}

impl Environment for QuantumEnv {
    type State = FockVector;

    fn q_bounds(&self) -> (f64, f64) {
        (self.cfg.q_min, self.cfg.q_max)
    }

    fn dt(&self) -> f64 {
        self.cfg.dt
    }

    fn steps_per_episode(&self) -> usize {
        self.cfg.steps_per_episode
    }

    fn reset<R: Rng + ?Sized>(&mut self, init: &Init<FockVector>, rng: &mut R) -> Result<Observation> {
        let psi = match init {
            Init::Fixed => FockVector::polar(self.cfg.n_atoms)?,
            Init::Random => FockVector::haar_random(self.cfg.n_atoms, rng)?,
            Init::Explicit(v) => {
                if v.n_atoms() != self.cfg.n_atoms {
                    return Err(Error::InvalidState(format!(
                        "state has N = {}, environment expects N = {}",
                        v.n_atoms(),
                        self.cfg.n_atoms
                    )));
                }
                FockVector::from_amplitudes(v.n_atoms(), v.amplitudes().to_vec())?
            }
        };
        self.set_state(psi);
        self.steps = 0;
        self.started = true;
        Ok(self.observation())
    }

    fn step(&mut self, q: f64) -> Result<StepResult> {
        if !self.started {
            return Err(Error::EpisodeNotStarted);
        }
        if self.steps >= self.cfg.steps_per_episode {
            return Err(Error::EpisodeFinished);
        }
        if !q.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite action {q}")));
        }
        let q = self.clip_q(q);
        let next = match &self.cache {
            Some(c) => c.get(q).apply(&self.psi),
            None => self.system.propagator(q, self.cfg.dt).apply(&self.psi),
        };
        let f_prev = self.fidelity;
        self.set_state(next);
        self.steps += 1;
        Ok(StepResult {
            obs: self.observation(),
            reward: self.cfg.reward.reward(f_prev, self.fidelity),
            done: self.steps >= self.cfg.steps_per_episode,
            q,
            info: self.info(),
        })
    }

    fn state(&self) -> &FockVector {
        &self.psi
    }

    fn observation(&self) -> Observation {
        Observation::from_phase(self.obs.rho0, self.obs.theta_s)
    }

    fn info(&self) -> StepInfo {
        StepInfo { rho0: self.obs.rho0, theta_s: self.obs.theta_s, fidelity: self.fidelity }
    }

    fn steps_taken(&self) -> usize {
        self.steps
    }
}
