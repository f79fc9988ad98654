//! Two-atom (`N = 2`) pseudo-spin-1/2 picture, used as an independent oracle.
//!
//! `|psi> = cos(theta/2) |0,2,0> + sin(theta/2) e^{i phi} |1,0,1>`, so
//! `rho0 = cos^2(theta/2)` and `theta_s = -phi`. From `i d|psi>/dt = H |psi>`:
//!
//! ```text
//! d theta / dt = -sqrt(2) c2 sin(phi)
//! d phi / dt   = -2 q + c2/2 + (c2/sqrt(2)) cos(phi) (tan(theta/2) - cot(theta/2))
//! ```

use std::f64::consts::{PI, SQRT_2};

use super::fock::FockVector;
use crate::error::{Error, Result};
use crate::meanfield::wrap_angle;
use crate::C64;

const POLE_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochPoint {
    pub theta: f64,
    pub phi: f64,
}

impl BlochPoint {
    pub fn to_state(&self) -> FockVector {
        let a = C64::new((self.theta / 2.0).cos(), 0.0);
        let b = C64::from_polar((self.theta / 2.0).sin(), self.phi);
        FockVector::from_raw(2, vec![a, b])
    }

    pub fn rho0(&self) -> f64 {
        (self.theta / 2.0).cos().powi(2)
    }

    pub fn theta_s(&self) -> f64 {
        wrap_angle(-self.phi)
    }
}

pub fn bloch_derivatives(c2: f64, theta: f64, phi: f64, q: f64) -> (f64, f64) {
    let half = theta / 2.0;
    let dtheta = -SQRT_2 * c2 * phi.sin();
    let dphi = -2.0 * q + c2 / 2.0 + c2 / SQRT_2 * phi.cos() * (half.tan() - 1.0 / half.tan());
    (dtheta, dphi)
}

/// One RK4 step of the Bloch equations. Refuses starting points within `1e-6` of a pole.
pub fn bloch_oracle_step(c2: f64, p: BlochPoint, q: f64, dt: f64) -> Result<BlochPoint> {
    if p.theta.abs() < POLE_GUARD || (p.theta - PI).abs() < POLE_GUARD {
        return Err(Error::InvalidArgument(format!("Bloch angle {} too close to a pole", p.theta)));
    }
    let f = |t: f64, ph: f64| bloch_derivatives(c2, t, ph, q);
    let (t0, p0) = (p.theta, p.phi);
    let k1 = f(t0, p0);
    let k2 = f(t0 + 0.5 * dt * k1.0, p0 + 0.5 * dt * k1.1);
    let k3 = f(t0 + 0.5 * dt * k2.0, p0 + 0.5 * dt * k2.1);
    let k4 = f(t0 + dt * k3.0, p0 + dt * k3.1);
    Ok(BlochPoint {
        theta: t0 + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        phi: p0 + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    })
}

/// Minimal transfer time `|0,2,0> -> |1,0,1>`: `pi / (sqrt(2) |c2|)`.
pub fn qsl_time(c2: f64) -> Result<f64> {
    if c2 == 0.0 || !c2.is_finite() {
        return Err(Error::InvalidArgument("quantum speed limit needs a finite nonzero c2".into()));
    }
    Ok(PI / (SQRT_2 * c2.abs()))
}

/// Energy spread of `|0,2,0>`: `sqrt(2) |c2| / 2`.
pub fn two_body_energy_spread(c2: f64) -> f64 {
    SQRT_2 * c2.abs() / 2.0
}

/// `arccos(|<psi_i|psi_f>|) / dE`.
pub fn bhattacharyya_time(overlap: f64, energy_spread: f64) -> f64 {
    overlap.clamp(-1.0, 1.0).acos() / energy_spread
}
