use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::fock::{validate_atom_number, FockVector};
use super::hamiltonian::{build_hamiltonian, HamiltonianMatrix};
use crate::error::{Error, Result};
use crate::C64;

/// Atom number and interaction strength of a single-mode system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinSystem {
    pub n_atoms: usize,
    pub c2: f64,
}

impl SpinSystem {
    pub fn new(n_atoms: usize, c2: f64) -> Result<Self> {
        validate_atom_number(n_atoms)?;
        if !c2.is_finite() {
            return Err(Error::InvalidArgument("c2 must be finite".into()));
        }
        Ok(SpinSystem { n_atoms, c2 })
    }

    pub fn dim(&self) -> usize {
        self.n_atoms / 2 + 1
    }

    pub fn hamiltonian(&self, q: f64) -> HamiltonianMatrix {
        build_hamiltonian(self.n_atoms, q, self.c2).expect("atom number validated at construction")
    }

    pub fn propagator(&self, q: f64, dt: f64) -> Propagator {
        Propagator::new(&self.hamiltonian(q), dt)
    }

    /// `exp(-i H(q) dt) psi`.
    pub fn propagate(&self, psi: &FockVector, q: f64, dt: f64) -> Result<FockVector> {
        if psi.n_atoms() != self.n_atoms {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: psi.dim() });
        }
        Ok(self.propagator(q, dt).apply(psi))
    }
}

/// Dense unitary `exp(-i H dt)` built from the eigendecomposition of `H`.
#[derive(Debug, Clone)]
pub struct Propagator {
    n_atoms: usize,
    dim: usize,
    /// Row-major.
    u: Vec<C64>,
}

impl Propagator {
    pub fn new(h: &HamiltonianMatrix, dt: f64) -> Self {
        let dim = h.dim();
        let eig = SymmetricEigen::new(h.to_dense());
        let phases: Vec<C64> = eig.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -e * dt)).collect();
        let v = &eig.eigenvectors;
        let mut u = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                u[i * dim + j] = (0..dim).map(|m| phases[m] * (v[(i, m)] * v[(j, m)])).sum();
            }
        }
        Propagator { n_atoms: h.n_atoms, dim, u }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.u[i * self.dim + j]
    }

    pub fn apply(&self, psi: &FockVector) -> FockVector {
        let a = psi.amplitudes();
        let out = self.u.chunks_exact(self.dim).map(|row| row.iter().zip(a).map(|(u, x)| u * x).sum()).collect();
        FockVector::from_raw(self.n_atoms, out)
    }

    /// `max |(U^dag U - I)_ij|`.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let s: C64 = (0..d).map(|k| self.entry(k, i).conj() * self.entry(k, j)).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }
}

/// Propagators for a fixed `(system, dt)` keyed by the exact bits of `q`.
///
/// Reads take a shared lock; a miss computes outside the lock and inserts once.
#[derive(Debug)]
pub struct PropagatorCache {
    system: SpinSystem,
    dt: f64,
    map: RwLock<HashMap<u64, Arc<Propagator>>>,
}

impl PropagatorCache {
    pub fn new(system: SpinSystem, dt: f64) -> Self {
        PropagatorCache { system, dt, map: RwLock::new(HashMap::new()) }
    }

    pub fn system(&self) -> SpinSystem {
        self.system
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn get(&self, q: f64) -> Arc<Propagator> {
        let key = q.to_bits();
        if let Some(p) = self.map.read().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Arc::clone(p);
        }
        let fresh = Arc::new(self.system.propagator(q, self.dt));
        let mut map = self.map.write().unwrap_or_else(|e| e.into_inner());
        Arc::clone(map.entry(key).or_insert(fresh))
    }

    pub fn len(&self) -> usize {
        self.map.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, SQRT_2};

    #[test]
    fn frozen_without_interaction() {
        let sys = SpinSystem::new(10, 0.0).unwrap();
        let start = FockVector::polar(10).unwrap();
        let mut psi = start.clone();
        for _ in 0..50 {
            psi = sys.propagate(&psi, 1.3, 0.1).unwrap();
            assert!((psi.fidelity(&start).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn resonant_rabi_oscillation() {
        let sys = SpinSystem::new(2, -1.0).unwrap();
        let start = FockVector::polar(2).unwrap();
        let target = FockVector::twin_fock(2).unwrap();
        for i in 0..=40 {
            let t = i as f64 * 0.1;
            let f = sys.propagate(&start, -0.25, t).unwrap().fidelity(&target).unwrap();
            assert!((f - (t / SQRT_2).sin().powi(2)).abs() < 1e-12);
        }
        let f = sys.propagate(&start, -0.25, PI / SQRT_2).unwrap().fidelity(&target).unwrap();
        assert!(f > 1.0 - 1e-12);
    }

    #[test]
    fn unitary_and_norm_preserving() {
        for n in [2, 6, 10, 30] {
            let sys = SpinSystem::new(n, -1.0).unwrap();
            for &q in &[-6.0, -0.3, 0.0, 2.0, 6.0] {
                let u = sys.propagator(q, 0.1);
                assert!(u.unitarity_defect() < 1e-12);
                let psi = u.apply(&FockVector::polar(n).unwrap());
                assert!((psi.norm_sqr().sqrt() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cache_returns_same_operator() {
        let cache = PropagatorCache::new(SpinSystem::new(4, -1.0).unwrap(), 0.1);
        let a = cache.get(0.5);
        let b = cache.get(0.5);
        assert!(Arc::ptr_eq(&a, &b));
        cache.get(-0.5);
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn propagate_rejects_wrong_size() {
        let sys = SpinSystem::new(4, -1.0).unwrap();
        assert!(sys.propagate(&FockVector::polar(2).unwrap(), 0.0, 0.1).is_err());
    }
}
