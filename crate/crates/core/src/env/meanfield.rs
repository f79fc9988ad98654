use rand::Rng;

use super::reward::{meanfield_progress, RewardForm};
use super::{Environment, Init, Observation, StepInfo, StepResult};
use crate::error::{Error, Result};
use crate::meanfield::{MeanFieldConfig, PhaseState};

/// `(rho0, theta_s)` start for fixed-init episodes.
pub const FIXED_START: PhaseState = PhaseState { rho0: 0.9, theta_s: 0.0 };
const RANDOM_RHO_RANGE: (f64, f64) = (0.05, 0.95);

#[derive(Debug, Clone)]
pub struct MeanFieldEnv {
    cfg: MeanFieldConfig,
    reward: RewardForm,
    state: PhaseState,
    steps: usize,
    started: bool,
}

impl MeanFieldEnv {
    pub fn new(cfg: MeanFieldConfig, reward: RewardForm) -> Result<Self> {
        cfg.validate()?;
        Ok(MeanFieldEnv { cfg, reward, state: FIXED_START, steps: 0, started: false })
    }

    pub fn config(&self) -> &MeanFieldConfig {
        &self.cfg
    }

    pub fn reward_form(&self) -> RewardForm {
        self.reward
    }

    fn check_active(&self) -> Result<()> {
        if !self.started {
            return Err(Error::EpisodeNotStarted);
        }
        if self.steps >= self.cfg.steps_per_episode {
            return Err(Error::EpisodeFinished);
        }
        Ok(())
    }

    fn finish_step(&mut self, prev: PhaseState, q: f64) -> StepResult {
        self.steps += 1;
        StepResult {
            obs: self.observation(),
            reward: meanfield_progress(prev.rho0, self.state.rho0, self.reward),
            done: self.steps >= self.cfg.steps_per_episode,
            q,
            info: self.info(),
        }
    }
}

impl Environment for MeanFieldEnv {
    type State = PhaseState;

    fn q_bounds(&self) -> (f64, f64) {
        (self.cfg.q_min, self.cfg.q_max)
    }

    fn dt(&self) -> f64 {
        self.cfg.dt
    }

    fn steps_per_episode(&self) -> usize {
        self.cfg.steps_per_episode
    }

    fn reset<R: Rng + ?Sized>(&mut self, init: &Init<PhaseState>, rng: &mut R) -> Result<Observation> {
        self.state = match init {
            Init::Fixed => FIXED_START,
            Init::Random => {
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                let rho = rng.random_range(RANDOM_RHO_RANGE.0..RANDOM_RHO_RANGE.1);
                PhaseState::new(rho, theta)
            }
            Init::Explicit(s) => PhaseState::checked(s.rho0, s.theta_s)?,
        };
        self.steps = 0;
        self.started = true;
        Ok(self.observation())
    }

    fn step(&mut self, q: f64) -> Result<StepResult> {
        self.check_active()?;
        if !q.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite action {q}")));
        }
        let q = self.cfg.clip_q(q);
        let prev = self.state;
        self.state = self.cfg.advance(prev, q);
        Ok(self.finish_step(prev, q))
    }

    /// Integrates the closed loop, re-evaluating (and clipping) the law at every RK4 stage.
    fn step_feedback(&mut self, law: &dyn Fn(&PhaseState) -> f64) -> Result<StepResult> {
        self.check_active()?;
        let prev = self.state;
        let q0 = self.cfg.clip_q(law(&prev));
        let cfg = self.cfg;
        self.state = cfg.advance_feedback(prev, |s| cfg.clip_q(law(&s)));
        Ok(self.finish_step(prev, q0))
    }

    fn state(&self) -> &PhaseState {
        &self.state
    }

    fn observation(&self) -> Observation {
        Observation::from_phase(self.state.rho0, self.state.theta_s)
    }

    fn info(&self) -> StepInfo {
        StepInfo { rho0: self.state.rho0, theta_s: self.state.theta_s, fidelity: 1.0 - self.state.rho0 }
    }

    fn steps_taken(&self) -> usize {
        self.steps
    }
}
