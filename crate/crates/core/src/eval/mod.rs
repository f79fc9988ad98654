//! Rollouts, policy maps, noise statistics and cross-size generalization.

mod analysis;
mod record;
mod rollout;

pub use analysis::{
    final_fidelity, generalize, noise_eval, policy_map, write_generalization_csv, GeneralizationRow, NoiseReport, PolicyMap,
};
pub use record::{RunRecord, RunRow, RunSummary};
pub use rollout::{deterministic_rollout, rollout, ActionMode, Controller, OpenLoop, PolicyController};
