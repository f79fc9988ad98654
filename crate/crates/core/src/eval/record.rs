use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::StepInfo;
use crate::error::{Error, Result};

/// One sample of a trajectory.
///
/// `q` is the control held over `[t, t + dt)`; the final row repeats the last
/// applied value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub t: f64,
    pub q: f64,
    pub rho0: f64,
    pub theta_s: f64,
    pub fidelity: f64,
}

/// A full episode time series, `steps + 1` rows starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dt: f64,
    pub rows: Vec<RunRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub final_fidelity: f64,
    pub max_fidelity: f64,
    pub final_rho0: f64,
    /// First time the fidelity reaches 0.99, if ever.
    pub time_to_099: Option<f64>,
}

impl RunRecord {
    pub(crate) fn start(dt: f64, info: StepInfo) -> Self {
        RunRecord { dt, rows: vec![row(0, dt, f64::NAN, info)] }
    }

    pub(crate) fn push(&mut self, q: f64, info: StepInfo) {
        let k = self.rows.len();
        self.rows.last_mut().expect("record starts with one row").q = q;
        self.rows.push(row(k, self.dt, q, info));
    }

    pub fn steps(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn final_row(&self) -> &RunRow {
        self.rows.last().expect("non-empty record")
    }

    pub fn final_fidelity(&self) -> f64 {
        self.final_row().fidelity
    }

    pub fn max_fidelity(&self) -> f64 {
        self.rows.iter().map(|r| r.fidelity).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn fidelities(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.fidelity).collect()
    }

    pub fn controls(&self) -> Vec<f64> {
        self.rows[..self.steps()].iter().map(|r| r.q).collect()
    }

    pub fn time_to(&self, threshold: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.fidelity >= threshold).map(|r| r.t)
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            steps: self.steps(),
            final_fidelity: self.final_fidelity(),
            max_fidelity: self.max_fidelity(),
            final_rho0: self.final_row().rho0,
            time_to_099: self.time_to(0.99),
        }
    }

    /// Checks the time grid and the row count against an expected episode length.
    pub fn check(&self, steps: usize) -> Result<()> {
        if self.rows.len() != steps + 1 {
            return Err(Error::InvalidState(format!("{} rows for {} steps", self.rows.len(), steps)));
        }
        for (k, r) in self.rows.iter().enumerate() {
            if (r.t - k as f64 * self.dt).abs() > 1e-9 * (1.0 + r.t) {
                return Err(Error::InvalidState(format!("row {k} has t = {}", r.t)));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

fn row(k: usize, dt: f64, q: f64, info: StepInfo) -> RunRow {
    RunRow { t: k as f64 * dt, q, rho0: info.rho0, theta_s: info.theta_s, fidelity: info.fidelity }
}
