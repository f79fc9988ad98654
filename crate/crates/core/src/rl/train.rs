use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::policy::PolicyParams;
use super::ppo::{ppo_update, EpisodeData, Learner, PpoSettings, TransitionBuffer};
use crate::env::{Environment, Init, OBS_DIM};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::seed::SeedTree;

/// Which start state training episodes use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    Fixed,
    Random,
}

impl InitMode {
    pub fn to_init<S>(self) -> Init<S> {
        match self {
            InitMode::Fixed => Init::Fixed,
            InitMode::Random => Init::Random,
        }
    }
}

impl std::str::FromStr for InitMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(InitMode::Fixed),
            "random" => Ok(InitMode::Random),
            other => Err(format!("unknown init mode `{other}` (expected fixed|random)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_sizes: Vec<usize>,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub target_kl: f64,
    pub clip_ratio: f64,
    pub epochs_per_update: usize,
    pub episodes_per_epoch: usize,
    pub total_epochs: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn meanfield() -> Self {
        TrainConfig {
            hidden_sizes: vec![32, 16],
            gamma: 0.999,
            gae_lambda: 0.97,
            lr_actor: 3e-4,
            lr_critic: 1e-3,
            target_kl: 0.01,
            clip_ratio: 0.2,
            epochs_per_update: 80,
            episodes_per_epoch: 4,
            total_epochs: 200,
            seed: 0,
        }
    }

    /// Quantum defaults; 200 epochs for `N = 2`, 1000 otherwise.
    pub fn quantum(n_atoms: usize) -> Self {
        TrainConfig {
            hidden_sizes: vec![64, 32],
            total_epochs: if n_atoms <= 2 { 200 } else { 1000 },
            ..TrainConfig::meanfield()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return Err(Error::config("hidden_sizes", format!("need at least one non-empty layer, got {:?}", self.hidden_sizes)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("gamma", format!("must lie in [0, 1], got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::config("gae_lambda", format!("must lie in [0, 1], got {}", self.gae_lambda)));
        }
        for (name, v) in [("lr_actor", self.lr_actor), ("lr_critic", self.lr_critic)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.target_kl >= 0.0) {
            return Err(Error::config("target_kl", format!("must be non-negative, got {}", self.target_kl)));
        }
        if !(self.clip_ratio > 0.0 && self.clip_ratio < 1.0) {
            return Err(Error::config("clip_ratio", format!("must lie in (0, 1), got {}", self.clip_ratio)));
        }
        for (name, v) in [
            ("epochs_per_update", self.epochs_per_update),
            ("episodes_per_epoch", self.episodes_per_epoch),
            ("total_epochs", self.total_epochs),
        ] {
            if v == 0 {
                return Err(Error::config(name, "must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn ppo(&self) -> PpoSettings {
        PpoSettings {
            clip_ratio: self.clip_ratio,
            target_kl: self.target_kl,
            epochs_per_update: self.epochs_per_update,
            lr_actor: self.lr_actor,
            lr_critic: self.lr_critic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Undiscounted return averaged over the epoch's episodes.
    pub mean_return: f64,
    pub mean_final_fidelity: f64,
    pub approx_kl: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub policy_steps: usize,
    pub log_std: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: PolicyParams,
    pub curve: Vec<EpochStats>,
}

/// One stochastic episode with the policy; also returns the final fidelity.
pub fn collect_episode<E: Environment>(
    env: &mut E,
    params: &PolicyParams,
    init: &Init<E::State>,
    streams: SeedTree,
) -> Result<(EpisodeData, f64)> {
    let mut init_rng = streams.child("init").rng();
    let mut act_rng = streams.child("act").rng();
    let mut obs = env.reset(init, &mut init_rng)?;
    let n = env.steps_per_episode();
    let mut ep = EpisodeData {
        obs: Vec::with_capacity(n * OBS_DIM),
        raw_actions: Vec::with_capacity(n),
        logprobs: Vec::with_capacity(n),
        rewards: Vec::with_capacity(n),
        values: Vec::with_capacity(n + 1),
    };
    let fidelity = loop {
        let x = obs.as_slice();
        let a = params.sample(x, &mut act_rng)?;
        ep.obs.extend_from_slice(x);
        ep.values.push(params.value(x)?);
        ep.raw_actions.push(a.raw);
        ep.logprobs.push(a.logprob);
        let r = env.step(a.action)?;
        ep.rewards.push(r.reward);
        obs = r.obs;
        if r.done {
            break r.info.fidelity;
        }
    };
    // fixed horizon: nothing is collected past the last step
    ep.values.push(0.0);
    Ok((ep, fidelity))
}

pub fn train<E: Environment>(proto: &E, cfg: &TrainConfig, init: InitMode, exec: &Exec) -> Result<TrainOutcome> {
    train_with(proto, cfg, init, exec, |_, _| {})
}

/// Training loop with a callback that sees each epoch's statistics and updated parameters.
///
/// Every episode draws from its own seed stream indexed by `(epoch, slot)`, so the
/// collected data do not depend on the worker count.
pub fn train_with<E, F>(proto: &E, cfg: &TrainConfig, init: InitMode, exec: &Exec, mut on_epoch: F) -> Result<TrainOutcome>
where
    E: Environment,
    F: FnMut(&EpochStats, &PolicyParams),
{
    cfg.validate()?;
    let seeds = SeedTree::new(cfg.seed);
    let (q_min, q_max) = proto.q_bounds();
    let params = PolicyParams::new(OBS_DIM, &cfg.hidden_sizes, q_min, q_max, &mut seeds.child("params").rng())?;
    let mut learner = Learner::new(params, cfg.lr_actor, cfg.lr_critic);
    let ppo = cfg.ppo();
    let episodes = seeds.child("episodes");
    let init = init.to_init::<E::State>();
    let mut curve = Vec::with_capacity(cfg.total_epochs);

    for epoch in 0..cfg.total_epochs {
        let params = &learner.params;
        let base = (epoch * cfg.episodes_per_epoch) as u64;
        let batch = exec.try_map(cfg.episodes_per_epoch, |j| {
            let mut env = proto.clone();
            collect_episode(&mut env, params, &init, episodes.index(base + j as u64))
        })?;

        let mut buffer = TransitionBuffer::new(OBS_DIM);
        let (mut ret, mut fid) = (0.0, 0.0);
        for (ep, f) in &batch {
            buffer.push_episode(ep, cfg.gamma, cfg.gae_lambda)?;
            ret += ep.total_reward();
            fid += f;
        }
        let stats = ppo_update(&buffer, &mut learner, &ppo)?;
        let k = batch.len() as f64;
        let row = EpochStats {
            epoch,
            mean_return: ret / k,
            mean_final_fidelity: fid / k,
            approx_kl: stats.approx_kl,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            policy_steps: stats.stop_epoch,
            log_std: learner.params.log_std,
        };
        on_epoch(&row, &learner.params);
        curve.push(row);
    }
    Ok(TrainOutcome { params: learner.params, curve })
}

/// CSV with columns `epoch, mean_return, mean_final_fidelity, approx_kl`.
pub fn write_learning_curve<W: Write>(curve: &[EpochStats], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "mean_return", "mean_final_fidelity", "approx_kl"])?;
    for s in curve {
        w.write_record([
            s.epoch.to_string(),
            s.mean_return.to_string(),
            s.mean_final_fidelity.to_string(),
            s.approx_kl.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_learning_curve(curve: &[EpochStats], path: &Path) -> Result<()> {
    write_learning_curve(curve, std::fs::File::create(path)?)
}
