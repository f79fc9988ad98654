//! Clipped-surrogate policy optimization with KL early stopping.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::gae::{compute_gae, normalize_advantages};
use super::policy::{gaussian_logprob, PolicyParams};
use crate::error::{Error, Result};

/// One finished episode as collected by a rollout worker.
#[derive(Debug, Clone, Default)]
pub struct EpisodeData {
    /// Row-major `steps x obs_dim`.
    pub obs: Vec<f64>,
    pub raw_actions: Vec<f64>,
    pub logprobs: Vec<f64>,
    pub rewards: Vec<f64>,
    /// One entry per step plus the bootstrap value after the last step.
    pub values: Vec<f64>,
}

impl EpisodeData {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// Transitions of one or more episodes, with advantages already estimated.
#[derive(Debug, Clone)]
pub struct TransitionBuffer {
    obs_dim: usize,
    obs: Vec<f64>,
    raw_actions: Vec<f64>,
    logprobs: Vec<f64>,
    rewards: Vec<f64>,
    values: Vec<f64>,
    advantages: Vec<f64>,
    returns: Vec<f64>,
    episodes: usize,
}

impl TransitionBuffer {
    pub fn new(obs_dim: usize) -> Self {
        TransitionBuffer {
            obs_dim,
            obs: Vec::new(),
            raw_actions: Vec::new(),
            logprobs: Vec::new(),
            rewards: Vec::new(),
            values: Vec::new(),
            advantages: Vec::new(),
            returns: Vec::new(),
            episodes: 0,
        }
    }

    pub fn push_episode(&mut self, ep: &EpisodeData, gamma: f64, lambda: f64) -> Result<()> {
        let n = ep.len();
        if ep.obs.len() != n * self.obs_dim {
            return Err(Error::DimensionMismatch { expected: n * self.obs_dim, found: ep.obs.len() });
        }
        if ep.raw_actions.len() != n || ep.logprobs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: ep.raw_actions.len().min(ep.logprobs.len()) });
        }
        let (adv, ret) = compute_gae(&ep.rewards, &ep.values, gamma, lambda)?;
        self.obs.extend_from_slice(&ep.obs);
        self.raw_actions.extend_from_slice(&ep.raw_actions);
        self.logprobs.extend_from_slice(&ep.logprobs);
        self.rewards.extend_from_slice(&ep.rewards);
        self.values.extend_from_slice(&ep.values[..n]);
        self.advantages.extend(adv);
        self.returns.extend(ret);
        self.episodes += 1;
        Ok(())
    }

    /// Direct construction from precomputed advantages and returns.
    pub fn from_parts(obs_dim: usize, obs: Vec<f64>, raw_actions: Vec<f64>, advantages: Vec<f64>, returns: Vec<f64>) -> Result<Self> {
        let n = raw_actions.len();
        if obs.len() != n * obs_dim || advantages.len() != n || returns.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: advantages.len() });
        }
        Ok(TransitionBuffer {
            obs_dim,
            obs,
            raw_actions,
            logprobs: vec![0.0; n],
            rewards: vec![0.0; n],
            values: vec![0.0; n],
            advantages,
            returns,
            episodes: 1,
        })
    }

    pub fn len(&self) -> usize {
        self.raw_actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw_actions.is_empty()
    }

    pub fn episodes(&self) -> usize {
        self.episodes
    }

    pub fn advantages(&self) -> &[f64] {
        &self.advantages
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn raw_actions(&self) -> &[f64] {
        &self.raw_actions
    }

    /// `obs_dim x len` observation matrix.
    pub fn obs_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.obs_dim, self.len(), &self.obs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpoSettings {
    pub clip_ratio: f64,
    pub target_kl: f64,
    pub epochs_per_update: usize,
    pub lr_actor: f64,
    pub lr_critic: f64,
}

/// Parameters plus the optimizer state that persists across updates.
#[derive(Debug, Clone)]
pub struct Learner {
    pub params: PolicyParams,
    actor_opt: Adam,
    log_std_opt: Adam,
    critic_opt: Adam,
}

impl Learner {
    pub fn new(params: PolicyParams, lr_actor: f64, lr_critic: f64) -> Self {
        let actor_opt = Adam::new(params.actor.params().len(), lr_actor);
        let log_std_opt = Adam::new(1, lr_actor);
        let critic_opt = Adam::new(params.critic.params().len(), lr_critic);
        Learner { params, actor_opt, log_std_opt, critic_opt }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    /// Surrogate loss before the update.
    pub policy_loss: f64,
    /// Critic loss before the update.
    pub value_loss: f64,
    /// Last measured approximate `KL(old || new)`.
    pub approx_kl: f64,
    /// Number of policy gradient steps taken before early stopping.
    pub stop_epoch: usize,
    pub clip_fraction: f64,
}

/// `(clipped, unclipped)` surrogate terms for one sample.
pub fn surrogate_terms(ratio: f64, advantage: f64, clip_ratio: f64) -> (f64, f64) {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip_ratio, 1.0 + clip_ratio) * advantage;
    (unclipped.min(clipped), unclipped)
}

/// Log-densities of `actions` under the current policy (batched path).
pub fn batch_logprobs(params: &PolicyParams, obs: &DMatrix<f64>, actions: &[f64]) -> Result<Vec<f64>> {
    let tr = params.actor.forward_batch(obs)?;
    Ok(tr
        .output()
        .iter()
        .zip(actions)
        .map(|(&y, &a)| gaussian_logprob(a, params.mean_from_actor_output(y), params.log_std))
        .collect())
}

#[derive(Debug, Clone)]
pub struct SurrogateEval {
    /// `-mean(min(r A, clip(r) A))`.
    pub loss: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_actor: Vec<f64>,
    pub grad_log_std: f64,
}

/// Clipped surrogate loss and its gradient w.r.t. actor weights and `log_std`.
pub fn surrogate_loss_and_grad(
    params: &PolicyParams,
    obs: &DMatrix<f64>,
    actions: &[f64],
    advantages: &[f64],
    logp_old: &[f64],
    clip_ratio: f64,
) -> Result<SurrogateEval> {
    let n = actions.len();
    if n == 0 {
        return Err(Error::EmptyBuffer);
    }
    if advantages.len() != n || logp_old.len() != n || obs.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: advantages.len().min(logp_old.len()).min(obs.ncols()) });
    }
    let tr = params.actor.forward_batch(obs)?;
    let inv_var = (-2.0 * params.log_std).exp();
    let half = params.half_range();
    let nf = n as f64;
    let mut loss = 0.0;
    let mut kl = 0.0;
    let mut clipped = 0usize;
    let mut d_y = DMatrix::zeros(1, n);
    let mut g_log_std = 0.0;
    for i in 0..n {
        let mu = params.mean_from_actor_output(tr.output()[(0, i)]);
        let logp = gaussian_logprob(actions[i], mu, params.log_std);
        let ratio = (logp - logp_old[i]).exp();
        let a = advantages[i];
        let (obj, _) = surrogate_terms(ratio, a, clip_ratio);
        loss -= obj / nf;
        kl += (logp_old[i] - logp) / nf;
        let outside = (a >= 0.0 && ratio > 1.0 + clip_ratio) || (a < 0.0 && ratio < 1.0 - clip_ratio);
        if (ratio - 1.0).abs() > clip_ratio {
            clipped += 1;
        }
        if !outside {
            // d loss / d logp
            let dl = -ratio * a / nf;
            let diff = actions[i] - mu;
            d_y[(0, i)] = dl * diff * inv_var * half;
            g_log_std += dl * (diff * diff * inv_var - 1.0);
        }
    }
    let mut grad_actor = vec![0.0; params.actor.params().len()];
    params.actor.backward(&tr, &d_y, &mut grad_actor);
    Ok(SurrogateEval { loss, approx_kl: kl, clip_fraction: clipped as f64 / nf, grad_actor, grad_log_std: g_log_std })
}

/// Mean squared critic error against `returns`, with gradient.
pub fn value_loss_and_grad(params: &PolicyParams, obs: &DMatrix<f64>, returns: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = returns.len();
    if n == 0 {
        return Err(Error::EmptyBuffer);
    }
    let tr = params.critic.forward_batch(obs)?;
    let nf = n as f64;
    let mut loss = 0.0;
    let mut d_v = DMatrix::zeros(1, n);
    for i in 0..n {
        let e = tr.output()[(0, i)] - returns[i];
        loss += e * e / nf;
        d_v[(0, i)] = 2.0 * e / nf;
    }
    let mut grad = vec![0.0; params.critic.params().len()];
    params.critic.backward(&tr, &d_v, &mut grad);
    Ok((loss, grad))
}

/// One PPO update over the full batch.
///
/// Policy steps stop as soon as the measured approximate KL exceeds `target_kl`;
/// the critic always takes `epochs_per_update` steps.
pub fn ppo_update(buffer: &TransitionBuffer, learner: &mut Learner, cfg: &PpoSettings) -> Result<UpdateStats> {
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let obs = buffer.obs_matrix();
    let actions = buffer.raw_actions();
    let mut adv = buffer.advantages().to_vec();
    normalize_advantages(&mut adv);
    let logp_old = batch_logprobs(&learner.params, &obs, actions)?;

    let mut stats = UpdateStats { policy_loss: 0.0, value_loss: 0.0, approx_kl: 0.0, stop_epoch: 0, clip_fraction: 0.0 };
    let mut steps = 0;
    for i in 0..cfg.epochs_per_update {
        let eval = surrogate_loss_and_grad(&learner.params, &obs, actions, &adv, &logp_old, cfg.clip_ratio)?;
        if i == 0 {
            stats.policy_loss = eval.loss;
        }
        stats.approx_kl = eval.approx_kl;
        stats.clip_fraction = eval.clip_fraction;
        if eval.approx_kl > cfg.target_kl {
            break;
        }
        learner.actor_opt.step(learner.params.actor.params_mut(), &eval.grad_actor);
        let mut ls = [learner.params.log_std];
        learner.log_std_opt.step(&mut ls, &[eval.grad_log_std]);
        learner.params.log_std = ls[0];
        learner.params.clamp_log_std();
        steps += 1;
    }
    stats.stop_epoch = steps;

    for i in 0..cfg.epochs_per_update {
        let (loss, grad) = value_loss_and_grad(&learner.params, &obs, buffer.returns())?;
        if i == 0 {
            stats.value_loss = loss;
        }
        learner.critic_opt.step(learner.params.critic.params_mut(), &grad);
    }
    Ok(stats)
}
