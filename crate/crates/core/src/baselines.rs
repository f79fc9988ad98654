//! Non-learning reference protocols.

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::env::{Environment, Init, MeanFieldEnv, StepResult};
use crate::error::{Error, Result};
use crate::eval::{rollout, Controller, OpenLoop, RunRecord};
use crate::exec::Exec;
use crate::meanfield::{wrap_angle, PhaseState};
use crate::seed::SeedTree;

/// Fidelity increments closer than this count as ties in the greedy search.
pub const GREEDY_TIE_TOLERANCE: f64 = 1e-12;

/// Bang phase ends once `|theta_s - pi/2|` drops below this.
pub const BANG_TOLERANCE: f64 = 0.01;

/// `n` evenly spaced points over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

pub fn default_greedy_grid(q_min: f64, q_max: f64) -> Vec<f64> {
    linspace(q_min, q_max, 121)
}

fn check_grid(name: &str, grid: &[f64], lo: f64, hi: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument(format!("{name} grid is empty")));
    }
    if let Some(q) = grid.iter().find(|q| !(lo..=hi).contains(*q)) {
        return Err(Error::InvalidArgument(format!("{name} grid value {q} outside [{lo}, {hi}]")));
    }
    Ok(())
}

/// Picks, at every step, the grid value with the largest one-step fidelity increment.
pub struct GreedyController<'a> {
    grid: &'a [f64],
    exec: &'a Exec,
}

impl<'a> GreedyController<'a> {
    pub fn new(grid: &'a [f64], exec: &'a Exec) -> Self {
        GreedyController { grid, exec }
    }

    /// Index of the best candidate; near-ties go to the smallest `|q|`, then the smallest `q`.
    pub fn choose(grid: &[f64], increments: &[f64]) -> usize {
        let best = increments.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (0..grid.len())
            .filter(|&i| increments[i] >= best - GREEDY_TIE_TOLERANCE)
            .min_by(|&a, &b| {
                let ka = (grid[a].abs(), grid[a]);
                let kb = (grid[b].abs(), grid[b]);
                ka.partial_cmp(&kb).unwrap_or(Ordering::Equal)
            })
            .expect("non-empty grid")
    }
}

impl<E: Environment> Controller<E> for GreedyController<'_> {
    fn advance(&mut self, env: &mut E) -> Result<StepResult> {
        let f0 = env.info().fidelity;
        let incs = self.exec.try_map(self.grid.len(), |i| {
            let mut trial = env.clone();
            Ok::<_, Error>(trial.step(self.grid[i])?.info.fidelity - f0)
        })?;
        env.step(self.grid[Self::choose(self.grid, &incs)])
    }
}

pub fn greedy_rollout<E: Environment>(env: &mut E, init: &Init<E::State>, grid: &[f64], exec: &Exec) -> Result<RunRecord> {
    let (lo, hi) = env.q_bounds();
    check_grid("greedy", grid, lo, hi)?;
    rollout(env, init, &mut SeedTree::new(0).rng(), &mut GreedyController::new(grid, exec))
}

/// Linear ramp from `q_i` to `q_f` over `[0, t_ramp]`, then held at `q_f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ramp {
    pub q_i: f64,
    pub q_f: f64,
    pub t_ramp: f64,
}

impl Ramp {
    pub fn at(&self, tau: f64) -> f64 {
        self.q_i + (self.q_f - self.q_i) * (tau / self.t_ramp).min(1.0)
    }

    /// Piecewise-constant version: step `k` holds the ramp value at the interval midpoint.
    pub fn control(&self, dt: f64) -> impl FnMut(usize) -> f64 + '_ {
        move |k| self.at((k as f64 + 0.5) * dt)
    }

    fn key(&self) -> (f64, f64, f64) {
        (self.q_i, self.q_f, self.t_ramp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RampSearch {
    pub best: Ramp,
    pub final_fidelity: f64,
    pub evaluated: usize,
    #[serde(skip)]
    pub record: RunRecord,
}

pub fn default_ramp_grids(q_min: f64, q_max: f64, horizon: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let q = linspace(q_min, q_max, 25);
    (q.clone(), q, linspace(horizon / 10.0, horizon, 10))
}

/// Exhaustive search over `qi_grid x qf_grid x t_grid` for the best final fidelity.
///
/// Exact ties go to the lexicographically smallest `(q_i, q_f, t_ramp)`, so the
/// answer does not depend on grid ordering.
pub fn ramp_search<E: Environment>(
    env: &E,
    init: &Init<E::State>,
    qi_grid: &[f64],
    qf_grid: &[f64],
    t_grid: &[f64],
    exec: &Exec,
) -> Result<RampSearch> {
    let (lo, hi) = env.q_bounds();
    check_grid("q_i", qi_grid, lo, hi)?;
    check_grid("q_f", qf_grid, lo, hi)?;
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("ramp time grid is empty".into()));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t > 0.0 && **t <= env.horizon() + 1e-12)) {
        return Err(Error::InvalidArgument(format!("ramp time {t} outside (0, {}]", env.horizon())));
    }
    let mut ramps = Vec::with_capacity(qi_grid.len() * qf_grid.len() * t_grid.len());
    for &q_i in qi_grid {
        for &q_f in qf_grid {
            for &t_ramp in t_grid {
                ramps.push(Ramp { q_i, q_f, t_ramp });
            }
        }
    }
    let dt = env.dt();
    let finals = exec.try_map(ramps.len(), |i| {
        let mut e = env.clone();
        let rec = rollout(&mut e, init, &mut SeedTree::new(0).rng(), &mut OpenLoop(ramps[i].control(dt)))?;
        Ok::<_, Error>(rec.final_fidelity())
    })?;
    let best = (0..ramps.len())
        .max_by(|&a, &b| {
            finals[a]
                .partial_cmp(&finals[b])
                .unwrap_or(Ordering::Equal)
                .then_with(|| ramps[b].key().partial_cmp(&ramps[a].key()).unwrap_or(Ordering::Equal))
        })
        .expect("non-empty search");
    let ramp = ramps[best];
    let record = rollout(&mut env.clone(), init, &mut SeedTree::new(0).rng(), &mut OpenLoop(ramp.control(dt)))?;
    Ok(RampSearch { best: ramp, final_fidelity: finals[best], evaluated: ramps.len(), record })
}

pub fn constant_q_rollout<E: Environment>(env: &mut E, init: &Init<E::State>, q: f64) -> Result<RunRecord> {
    let (lo, hi) = env.q_bounds();
    if !(lo..=hi).contains(&q) {
        return Err(Error::InvalidArgument(format!("constant q = {q} outside [{lo}, {hi}]")));
    }
    rollout(env, init, &mut SeedTree::new(0).rng(), &mut OpenLoop(|_| q))
}

/// Two-phase mean-field protocol.
///
/// First rotate the phase to `pi/2` at maximal `|q|`, landing the final bang
/// interval exactly with a reduced `q`. Then hold it there with the feedback law
/// `q = c2 (1 - 2 rho0)`, integrated in closed loop.
#[derive(Debug, Clone, Default)]
pub struct AnalyticController {
    locked: bool,
}

impl AnalyticController {
    pub fn new() -> Self {
        Self::default()
    }

    fn phase_error(s: &PhaseState) -> f64 {
        // signed distance to pi/2 in (-pi, pi]
        let d = wrap_angle(FRAC_PI_2 - s.theta_s);
        if d > std::f64::consts::PI {
            d - std::f64::consts::TAU
        } else {
            d
        }
    }

    /// The constant `q` over one interval that ends at `theta_s = pi/2`, if the bang would overshoot.
    fn landing_q(env: &MeanFieldEnv, bang: f64, err: f64) -> Result<Option<f64>> {
        let after = |q: f64| -> Result<f64> {
            let mut e = env.clone();
            e.step(q)?;
            Ok(Self::phase_error(e.state()))
        };
        let e_bang = after(bang)?;
        if e_bang.signum() == err.signum() && e_bang.abs() >= BANG_TOLERANCE {
            return Ok(None);
        }
        // bisect between the bang value and the opposite bound
        let (lo, hi) = env.q_bounds();
        let (mut a, mut b) = if bang == lo { (lo, hi) } else { (hi, lo) };
        let ea = e_bang;
        if after(b)?.signum() == ea.signum() {
            return Ok(Some(bang));
        }
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if after(m)?.signum() == ea.signum() {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(Some(0.5 * (a + b)))
    }
}

impl Controller<MeanFieldEnv> for AnalyticController {
    fn advance(&mut self, env: &mut MeanFieldEnv) -> Result<StepResult> {
        let err = Self::phase_error(env.state());
        if !self.locked && err.abs() < BANG_TOLERANCE {
            self.locked = true;
        }
        if self.locked {
            let cfg = *env.config();
            return env.step_feedback(&move |s: &PhaseState| cfg.analytic_optimal_q(*s));
        }
        let (lo, hi) = env.q_bounds();
        // d theta / dt = -2q + ..., so a positive error needs the most negative q
        let bang = if err > 0.0 { lo } else { hi };
        let q = Self::landing_q(env, bang, err)?.unwrap_or(bang);
        let r = env.step(q)?;
        if Self::phase_error(env.state()).abs() < BANG_TOLERANCE {
            self.locked = true;
        }
        Ok(r)
    }
}

pub fn analytic_meanfield_rollout(env: &mut MeanFieldEnv, init: &Init<PhaseState>) -> Result<RunRecord> {
    rollout(env, init, &mut SeedTree::new(0).rng(), &mut AnalyticController::new())
}
