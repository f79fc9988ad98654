use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::record::RunRecord;
use super::rollout::{deterministic_rollout, rollout, ActionMode, PolicyController};
use crate::env::{Environment, Init, QuantumEnv, QuantumEnvConfig};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::quantum::validate_atom_number;
use crate::rl::PolicyParams;
use crate::seed::SeedTree;

/// Mean action over a `(theta_s, rho0)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyMap {
    /// `theta_s` nodes `j * 2pi / n`, covering `[0, 2pi)`.
    pub theta: Vec<f64>,
    /// `rho0` nodes evenly spaced over `[0, 1]`.
    pub rho: Vec<f64>,
    /// Row-major by `rho`: `q[i * theta.len() + j]`.
    pub q: Vec<f64>,
}

impl PolicyMap {
    pub fn at(&self, i_rho: usize, j_theta: usize) -> f64 {
        self.q[i_rho * self.theta.len() + j_theta]
    }

    /// Header row of `theta_s` nodes; each row starts with its `rho0` node.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["rho0\\theta_s".to_string()];
        header.extend(self.theta.iter().map(|t| t.to_string()));
        w.write_record(&header)?;
        for (i, r) in self.rho.iter().enumerate() {
            let mut rec = vec![r.to_string()];
            rec.extend((0..self.theta.len()).map(|j| self.at(i, j).to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

pub fn policy_map(params: &PolicyParams, n_theta: usize, n_rho: usize) -> Result<PolicyMap> {
    if n_theta < 2 || n_rho < 2 {
        return Err(Error::InvalidArgument(format!("policy map grid must be at least 2x2, got {n_theta}x{n_rho}")));
    }
    let theta: Vec<f64> = (0..n_theta).map(|j| j as f64 * std::f64::consts::TAU / n_theta as f64).collect();
    let rho: Vec<f64> = (0..n_rho).map(|i| i as f64 / (n_rho - 1) as f64).collect();
    let x = DMatrix::from_fn(3, n_theta * n_rho, |f, c| {
        let (r, t) = (rho[c / n_theta], theta[c % n_theta]);
        [r, t.cos(), t.sin()][f]
    });
    let out = params.actor.forward_batch(&x)?;
    let q = out.output().iter().map(|&y| params.clip(params.mean_from_actor_output(y))).collect();
    Ok(PolicyMap { theta, rho, q })
}

/// Per-time fidelity statistics over noisy rollouts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub sigma: f64,
    pub n_samples: usize,
    pub t: Vec<f64>,
    pub mean_fidelity: Vec<f64>,
    /// Unbiased (`n - 1`) sample standard deviation; 0 for a single sample.
    pub std_fidelity: Vec<f64>,
    /// Raw fidelity series, one per sample.
    #[serde(skip)]
    pub samples: Vec<Vec<f64>>,
}

impl NoiseReport {
    pub fn from_samples(sigma: f64, t: Vec<f64>, samples: Vec<Vec<f64>>) -> Result<Self> {
        let n = samples.len();
        if n == 0 || samples.iter().any(|s| s.len() != t.len()) {
            return Err(Error::InvalidArgument("noise samples must be non-empty and aligned with t".into()));
        }
        let mut mean = vec![0.0; t.len()];
        let mut std = vec![0.0; t.len()];
        for k in 0..t.len() {
            let m = samples.iter().map(|s| s[k]).sum::<f64>() / n as f64;
            mean[k] = m.clamp(0.0, 1.0);
            if n > 1 {
                let ss: f64 = samples.iter().map(|s| (s[k] - m).powi(2)).sum();
                std[k] = (ss / (n - 1) as f64).sqrt();
            }
        }
        Ok(NoiseReport { sigma, n_samples: n, t, mean_fidelity: mean, std_fidelity: std, samples })
    }

    pub fn final_mean(&self) -> f64 {
        *self.mean_fidelity.last().unwrap()
    }

    pub fn final_std(&self) -> f64 {
        *self.std_fidelity.last().unwrap()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "mean_fidelity", "std_fidelity"])?;
        for k in 0..self.t.len() {
            w.write_record([self.t[k].to_string(), self.mean_fidelity[k].to_string(), self.std_fidelity[k].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Rolls out `q_t = clip(mu_t + sigma * eta_t)` from the fixed start, `n_samples` times.
///
/// Sample `i` draws its noise from `seeds.child("noise").index(i)`.
pub fn noise_eval<E: Environment>(
    proto: &E,
    params: &PolicyParams,
    sigma: f64,
    n_samples: usize,
    seeds: SeedTree,
    exec: &Exec,
) -> Result<NoiseReport> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("noise strength must be non-negative, got {sigma}")));
    }
    if n_samples == 0 {
        return Err(Error::InvalidArgument("need at least one noise sample".into()));
    }
    let noise = seeds.child("noise");
    let runs = exec.try_map(n_samples, |i| {
        let mut env = proto.clone();
        let mut ctrl = PolicyController { params, mode: ActionMode::Noisy { sigma, rng: noise.index(i as u64).rng() } };
        rollout(&mut env, &Init::Fixed, &mut seeds.child("init").rng(), &mut ctrl)
    })?;
    let t = runs[0].rows.iter().map(|r| r.t).collect();
    NoiseReport::from_samples(sigma, t, runs.iter().map(RunRecord::fidelities).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationRow {
    pub n_atoms: usize,
    pub final_fidelity: f64,
    pub max_fidelity: f64,
}

/// Deterministic rollouts of one policy on quantum systems of other sizes.
pub fn generalize(params: &PolicyParams, base: &QuantumEnvConfig, n_list: &[usize], exec: &Exec) -> Result<Vec<GeneralizationRow>> {
    for &n in n_list {
        validate_atom_number(n)?;
    }
    exec.try_map(n_list.len(), |i| {
        let cfg = QuantumEnvConfig { n_atoms: n_list[i], ..*base };
        let rec = deterministic_rollout(&mut QuantumEnv::new(cfg)?, params)?;
        Ok(GeneralizationRow { n_atoms: cfg.n_atoms, final_fidelity: rec.final_fidelity(), max_fidelity: rec.max_fidelity() })
    })
}

pub fn write_generalization_csv<W: Write>(rows: &[GeneralizationRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Convenience: final fidelity of the deterministic rollout on `env`.
pub fn final_fidelity<E: Environment>(env: &E, params: &PolicyParams) -> Result<f64> {
    Ok(deterministic_rollout(&mut env.clone(), params)?.final_fidelity())
}
