use rand::Rng;
use rand_distr::StandardNormal;

use super::record::RunRecord;
use crate::env::{Environment, Init, StepResult};
use crate::error::Result;
use crate::rl::PolicyParams;
use crate::seed;

/// Anything that can drive an environment one control interval forward.
pub trait Controller<E: Environment> {
    fn advance(&mut self, env: &mut E) -> Result<StepResult>;
}

/// Open-loop control from a function of the step index.
pub struct OpenLoop<F>(pub F);

impl<E: Environment, F: FnMut(usize) -> f64> Controller<E> for OpenLoop<F> {
    fn advance(&mut self, env: &mut E) -> Result<StepResult> {
        let q = (self.0)(env.steps_taken());
        env.step(q)
    }
}

/// How a policy turns its Gaussian into a control.
#[derive(Debug, Clone)]
pub enum ActionMode {
    /// Apply the mean.
    Deterministic,
    /// Sample from the policy distribution.
    Stochastic(seed::Rng),
    /// Mean plus white Gaussian noise of fixed strength.
    Noisy { sigma: f64, rng: seed::Rng },
}

pub struct PolicyController<'a> {
    pub params: &'a PolicyParams,
    pub mode: ActionMode,
}

impl<'a> PolicyController<'a> {
    pub fn deterministic(params: &'a PolicyParams) -> Self {
        PolicyController { params, mode: ActionMode::Deterministic }
    }
}

impl<E: Environment> Controller<E> for PolicyController<'_> {
    fn advance(&mut self, env: &mut E) -> Result<StepResult> {
        let obs = env.observation();
        let q = match &mut self.mode {
            ActionMode::Deterministic => self.params.mean_action(obs.as_slice())?,
            ActionMode::Stochastic(rng) => self.params.sample(obs.as_slice(), rng)?.action,
            ActionMode::Noisy { sigma, rng } => {
                let eta: f64 = rng.sample(StandardNormal);
                self.params.mean_action(obs.as_slice())? + *sigma * eta
            }
        };
        env.step(q)
    }
}

/// Resets `env` and runs a full episode under `ctrl`, recording every step.
pub fn rollout<E, C, R>(env: &mut E, init: &Init<E::State>, init_rng: &mut R, ctrl: &mut C) -> Result<RunRecord>
where
    E: Environment,
    C: Controller<E> + ?Sized,
    R: Rng + ?Sized,
{
    env.reset(init, init_rng)?;
    let mut rec = RunRecord::start(env.dt(), env.info());
    loop {
        let r = ctrl.advance(env)?;
        rec.push(r.q, r.info);
        if r.done {
            return Ok(rec);
        }
    }
}

/// Mean-action rollout from the environment's fixed start.
pub fn deterministic_rollout<E: Environment>(env: &mut E, params: &PolicyParams) -> Result<RunRecord> {
    rollout(env, &Init::Fixed, &mut seed::SeedTree::new(0).rng(), &mut PolicyController::deterministic(params))
}
