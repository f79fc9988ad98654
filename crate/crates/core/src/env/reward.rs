use serde::{Deserialize, Serialize};

/// Infidelities below this are floored before taking logarithms.
pub const INFIDELITY_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RewardForm {
    /// Fidelity increment.
    Delta,
    /// Log-infidelity ratio; one unit per e-fold of infidelity removed.
    #[default]
    Log,
}

impl RewardForm {
    pub fn reward(self, f_prev: f64, f_cur: f64) -> f64 {
        match self {
            RewardForm::Delta => reward_delta(f_prev, f_cur),
            RewardForm::Log => reward_log(f_prev, f_cur),
        }
    }
}

impl std::str::FromStr for RewardForm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "delta" => Ok(RewardForm::Delta),
            "log" => Ok(RewardForm::Log),
            other => Err(format!("unknown reward form `{other}` (expected delta|log)")),
        }
    }
}

pub fn reward_delta(f_prev: f64, f_cur: f64) -> f64 {
    f_cur - f_prev
}

/// `-ln((1 - F_cur) / (1 - F_prev))` with infidelities floored at [`INFIDELITY_FLOOR`].
pub fn reward_log(f_prev: f64, f_cur: f64) -> f64 {
    let prev = (1.0 - f_prev).max(INFIDELITY_FLOOR);
    let cur = (1.0 - f_cur).max(INFIDELITY_FLOOR);
    -(cur / prev).ln()
}

/// Mean-field analog of fidelity: progress `1 - rho0` toward `rho0 = 0`.
pub fn meanfield_progress(rho_prev: f64, rho_cur: f64, form: RewardForm) -> f64 {
    form.reward(1.0 - rho_prev, 1.0 - rho_cur)
}
