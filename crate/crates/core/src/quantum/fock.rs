use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meanfield::wrap_angle;
use crate::C64;

const NORM_TOLERANCE: f64 = 1e-9;
/// Below this magnitude of the pair coherence `theta_s` is reported as 0.
const COHERENCE_FLOOR: f64 = 1e-12;

pub fn validate_atom_number(n_atoms: usize) -> Result<()> {
    if n_atoms < 2 || !n_atoms.is_multiple_of(2) {
        return Err(Error::InvalidAtomNumber(n_atoms));
    }
    Ok(())
}

/// Amplitudes over `|k, N-2k, k>`, `k = 0..=N/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockVector {
    n_atoms: usize,
    amps: Vec<C64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumObservables {
    pub rho0: f64,
    /// Wrapped into `[0, 2pi)`.
    pub theta_s: f64,
}

impl FockVector {
    /// Validates length and normalization; never renormalizes.
    pub fn from_amplitudes(n_atoms: usize, amps: Vec<C64>) -> Result<Self> {
        validate_atom_number(n_atoms)?;
        let dim = n_atoms / 2 + 1;
        if amps.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: amps.len() });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let v = FockVector { n_atoms, amps };
        let n2 = v.norm_sqr();
        if (n2 - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(n2));
        }
        Ok(v)
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(n_atoms: usize, mut amps: Vec<C64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero or non-finite vector".into()));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        FockVector::from_amplitudes(n_atoms, amps)
    }

    /// The Fock state `|k, N-2k, k>`.
    pub fn fock(n_atoms: usize, k: usize) -> Result<Self> {
        validate_atom_number(n_atoms)?;
        let dim = n_atoms / 2 + 1;
        if k >= dim {
            return Err(Error::InvalidArgument(format!("Fock index {k} out of range for N = {n_atoms}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[k] = C64::new(1.0, 0.0);
        Ok(FockVector { n_atoms, amps })
    }

    /// `|0, N, 0>`: every atom in `m_F = 0`.
    pub fn polar(n_atoms: usize) -> Result<Self> {
        FockVector::fock(n_atoms, 0)
    }

    /// `|N/2, 0, N/2>`.
    pub fn twin_fock(n_atoms: usize) -> Result<Self> {
        FockVector::fock(n_atoms, n_atoms / 2)
    }

    /// Independent standard complex Gaussian amplitudes, normalized.
    pub fn haar_random<R: Rng + ?Sized>(n_atoms: usize, rng: &mut R) -> Result<Self> {
        validate_atom_number(n_atoms)?;
        let amps = (0..n_atoms / 2 + 1)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        FockVector::normalized(n_atoms, amps)
    }

    pub(crate) fn from_raw(n_atoms: usize, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), n_atoms / 2 + 1);
        FockVector { n_atoms, amps }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn with_global_phase(&self, alpha: f64) -> FockVector {
        let p = C64::from_polar(1.0, alpha);
        FockVector { n_atoms: self.n_atoms, amps: self.amps.iter().map(|a| a * p).collect() }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        if self.amps.len() != other.amps.len() {
            return Err(Error::DimensionMismatch { expected: self.amps.len(), found: other.amps.len() });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|<self|target>|^2`, clamped into `[0, 1]` against rounding.
    pub fn fidelity(&self, target: &FockVector) -> Result<f64> {
        Ok(self.inner(target)?.norm_sqr().clamp(0.0, 1.0))
    }

    /// `<N0> / N`.
    pub fn rho0(&self) -> f64 {
        let n = self.n_atoms as f64;
        let r: f64 = self.amps.iter().enumerate().map(|(k, a)| (n - 2.0 * k as f64) * a.norm_sqr()).sum::<f64>() / n;
        r.clamp(0.0, 1.0)
    }

    /// `<a1^dag a-1^dag a0 a0>`.
    pub fn pair_coherence(&self) -> C64 {
        let n = self.n_atoms as f64;
        self.amps
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let kf = k as f64;
                let n0 = n - 2.0 * kf;
                w[1].conj() * w[0] * ((kf + 1.0) * (n0 * (n0 - 1.0)).sqrt())
            })
            .sum()
    }

    pub fn observables(&self) -> QuantumObservables {
        let c = self.pair_coherence();
        let theta_s = if c.norm() < COHERENCE_FLOOR { 0.0 } else { wrap_angle(c.arg()) };
        QuantumObservables { rho0: self.rho0(), theta_s }
    }
}
