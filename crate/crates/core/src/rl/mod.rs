//! From-scratch PPO actor-critic for a bounded scalar control.

mod adam;
mod checkpoint;
mod gae;
mod mlp;
mod policy;
mod ppo;
mod train;

pub use adam::Adam;
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use gae::{compute_gae, normalize_advantages};
pub use mlp::{Mlp, OutputActivation, Trace};
pub use policy::{gaussian_logprob, ActionSample, PolicyParams, LOG_STD_MAX, LOG_STD_MIN};
pub use ppo::{
    batch_logprobs, ppo_update, surrogate_loss_and_grad, surrogate_terms, value_loss_and_grad, EpisodeData, Learner,
    PpoSettings, SurrogateEval, TransitionBuffer, UpdateStats,
};
pub use train::{collect_episode, save_learning_curve, train, train_with, write_learning_curve, EpochStats, InitMode, TrainConfig, TrainOutcome};
