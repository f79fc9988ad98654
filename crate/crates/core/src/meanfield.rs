//! Classical mean-field spin-1 dynamics in the `F_z = 0` subspace.
//!
//! The state is the population fraction `rho0` of the `m_F = 0` component and the
//! relative magnetic phase `theta_s`. With `hbar = 1`:
//!
//! ```text
//! d rho0 / dt    = 2 c2 rho0 (1 - rho0) sin(theta_s)
//! d theta_s / dt = -2 q + 2 c2 (1 - 2 rho0) (1 + cos(theta_s))
//! ```

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point `(rho0, theta_s)` of the mean-field phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub rho0: f64,
    pub theta_s: f64,
}

impl PhaseState {
    /// Builds a state, clamping `rho0` into `[0, 1]` and wrapping `theta_s` into `[0, 2pi)`.
    pub fn new(rho0: f64, theta_s: f64) -> Self {
        PhaseState { rho0: rho0.clamp(0.0, 1.0), theta_s: wrap_angle(theta_s) }
    }

    /// Strict constructor for caller-provided states.
    pub fn checked(rho0: f64, theta_s: f64) -> Result<Self> {
        if !rho0.is_finite() || !theta_s.is_finite() {
            return Err(Error::InvalidState("non-finite phase-space coordinate".into()));
        }
        if !(0.0..=1.0).contains(&rho0) {
            return Err(Error::InvalidState(format!("rho0 = {rho0} outside [0, 1]")));
        }
        Ok(PhaseState::new(rho0, theta_s))
    }
}

/// Wraps an angle into `[0, 2pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldConfig {
    /// Spin-exchange strength, negative (ferromagnetic).
    pub c2: f64,
    pub q_min: f64,
    pub q_max: f64,
    /// Duration of one control interval.
    pub dt: f64,
    pub steps_per_episode: usize,
    /// RK4 substeps per control interval.
    pub substeps: usize,
}

impl Default for MeanFieldConfig {
    fn default() -> Self {
        MeanFieldConfig { c2: -1.0, q_min: -6.0, q_max: 6.0, dt: 0.05, steps_per_episode: 100, substeps: 5 }
    }
}

impl MeanFieldConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c2 < 0.0) {
            return Err(Error::config("c2", format!("must be negative (ferromagnetic), got {}", self.c2)));
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
        if self.substeps == 0 {
            return Err(Error::config("substeps", "must be at least 1"));
        }
        Ok(())
    }

    /// Episode length `T_c`.
    pub fn horizon(&self) -> f64 {
        self.dt * self.steps_per_episode as f64
    }

    pub fn clip_q(&self, q: f64) -> f64 {
        q.clamp(self.q_min, self.q_max)
    }

    pub fn derivatives(&self, s: PhaseState, q: f64) -> (f64, f64) {
        derivatives(self.c2, s.rho0, s.theta_s, q)
    }

    /// Feedback law that holds `theta_s` at `pi/2`, where the decay of `rho0` is fastest.
    ///
    /// Zeroing the phase equation at `theta_s = pi/2` gives `q = c2 (1 - 2 rho0)`.
    pub fn analytic_optimal_q(&self, s: PhaseState) -> f64 {
        self.clip_q(self.c2 * (1.0 - 2.0 * s.rho0))
    }

    /// One control interval with `q` held constant, split into `substeps` RK4 steps.
    pub fn advance(&self, s: PhaseState, q: f64) -> PhaseState {
        let h = self.dt / self.substeps as f64;
        (0..self.substeps).fold(s, |s, _| rk4_step(self.c2, s, q, h))
    }

    /// One control interval under a state-feedback law re-evaluated at every RK4 stage.
    pub fn advance_feedback<F: Fn(PhaseState) -> f64>(&self, s: PhaseState, law: F) -> PhaseState {
        let h = self.dt / self.substeps as f64;
        (0..self.substeps).fold(s, |s, _| rk4_step_feedback(self.c2, s, h, &law))
    }
}

pub fn derivatives(c2: f64, rho0: f64, theta_s: f64, q: f64) -> (f64, f64) {
    let drho = 2.0 * c2 * rho0 * (1.0 - rho0) * theta_s.sin();
    let dtheta = -2.0 * q + 2.0 * c2 * (1.0 - 2.0 * rho0) * (1.0 + theta_s.cos());
    (drho, dtheta)
}

/// Unconstrained RK4 step of the raw `(rho0, theta_s)` pair; `dt` may be negative.
fn rk4_raw<F: Fn(f64, f64) -> f64>(c2: f64, y: (f64, f64), dt: f64, q_of: F) -> (f64, f64) {
    let f = |r: f64, t: f64| derivatives(c2, r, t, q_of(r, t));
    let k1 = f(y.0, y.1);
    let k2 = f(y.0 + 0.5 * dt * k1.0, y.1 + 0.5 * dt * k1.1);
    let k3 = f(y.0 + 0.5 * dt * k2.0, y.1 + 0.5 * dt * k2.1);
    let k4 = f(y.0 + dt * k3.0, y.1 + dt * k3.1);
    (
        y.0 + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        y.1 + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

/// Classical RK4 step with constant `q`; the result is clamped and wrapped.
pub fn rk4_step(c2: f64, s: PhaseState, q: f64, dt: f64) -> PhaseState {
    let (r, t) = rk4_raw(c2, (s.rho0, s.theta_s), dt, |_, _| q);
    PhaseState::new(r, t)
}

/// RK4 step where `q` is a function of the (unwrapped) stage state.
pub fn rk4_step_feedback<F: Fn(PhaseState) -> f64>(c2: f64, s: PhaseState, dt: f64, law: F) -> PhaseState {
    let (r, t) = rk4_raw(c2, (s.rho0, s.theta_s), dt, |r, t| law(PhaseState { rho0: r.clamp(0.0, 1.0), theta_s: t }));
    PhaseState::new(r, t)
}

/// Closed form of the population equation with `theta_s` pinned at `pi/2`.
pub fn logistic_oracle(rho0_init: f64, t: f64, c2: f64) -> f64 {
    let e = (2.0 * c2 * t).exp();
    rho0_init * e / (1.0 - rho0_init + rho0_init * e)
}

/// Rate of change of `theta_s` when sitting exactly at `theta_s = pi/2`.
pub fn phase_drift_at_quarter_turn(c2: f64, rho0: f64, q: f64) -> f64 {
    derivatives(c2, rho0, FRAC_PI_2, q).1
}
