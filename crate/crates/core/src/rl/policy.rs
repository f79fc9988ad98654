use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::{Mlp, OutputActivation};
use crate::error::{Error, Result};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Gaussian log-density of `x` under `Normal(mu, exp(log_std)^2)`.
pub fn gaussian_logprob(x: f64, mu: f64, log_std: f64) -> f64 {
    let z = (x - mu) * (-log_std).exp();
    -0.5 * z * z - log_std - 0.5 * (2.0 * PI).ln()
}

/// Actor-critic parameters for a one-dimensional bounded control.
///
/// The actor ends in `tanh`, and its output `y` maps onto the control range as
/// `mu = (q_max + q_min)/2 + (q_max - q_min)/2 * y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub actor: Mlp,
    pub log_std: f64,
    pub critic: Mlp,
    pub q_min: f64,
    pub q_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionSample {
    /// Clipped into `[q_min, q_max]`.
    pub action: f64,
    /// Pre-clip Gaussian draw.
    pub raw: f64,
    /// Log-density of `raw`.
    pub logprob: f64,
}

impl PolicyParams {
    /// Orthogonal init: hidden gain `sqrt(2)`, actor output gain 0.01, critic output gain 1, `log_std = 0`.
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, hidden: &[usize], q_min: f64, q_max: f64, rng: &mut R) -> Result<Self> {
        if !(q_min < q_max) {
            return Err(Error::InvalidArgument(format!("empty control range [{q_min}, {q_max}]")));
        }
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let gain = std::f64::consts::SQRT_2;
        let actor = Mlp::orthogonal(&sizes, OutputActivation::Tanh, gain, 0.01, rng)?;
        let critic = Mlp::orthogonal(&sizes, OutputActivation::Linear, gain, 1.0, rng)?;
        Ok(PolicyParams { actor, log_std: 0.0, critic, q_min, q_max })
    }

    pub fn check(&self) -> Result<()> {
        self.actor.check()?;
        self.critic.check()?;
        if self.actor.output_dim() != 1 || self.critic.output_dim() != 1 {
            return Err(Error::InvalidArgument("actor and critic must have one output".into()));
        }
        if self.actor.input_dim() != self.critic.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.actor.input_dim(), found: self.critic.input_dim() });
        }
        if !(self.q_min < self.q_max) {
            return Err(Error::InvalidArgument("empty control range".into()));
        }
        Ok(())
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.q_max + self.q_min)
    }

    pub fn half_range(&self) -> f64 {
        0.5 * (self.q_max - self.q_min)
    }

    pub fn std(&self) -> f64 {
        self.log_std.exp()
    }

    pub fn clamp_log_std(&mut self) {
        self.log_std = self.log_std.clamp(LOG_STD_MIN, LOG_STD_MAX);
    }

    pub fn mean_from_actor_output(&self, y: f64) -> f64 {
        self.center() + self.half_range() * y
    }

    pub fn mean_action(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.mean_from_actor_output(self.actor.forward(obs)?[0]))
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.critic.forward(obs)?[0])
    }

    pub fn clip(&self, q: f64) -> f64 {
        q.clamp(self.q_min, self.q_max)
    }

    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<ActionSample> {
        if obs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite observation".into()));
        }
        let mu = self.mean_action(obs)?;
        let eps: f64 = rng.sample(StandardNormal);
        let raw = mu + self.std() * eps;
        Ok(ActionSample { action: self.clip(raw), raw, logprob: gaussian_logprob(raw, mu, self.log_std) })
    }
}
