use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::fock::{validate_atom_number, FockVector};
use crate::error::Result;
use crate::C64;

/// Single-mode Hamiltonian restricted to `F_z = 0`; real symmetric tridiagonal.
///
/// ```text
/// H = c2/(2N) [ (2 N0 - 1)(N1 + N-1) + 2 (a1^dag a-1^dag a0 a0 + h.c.) ] - q N0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianMatrix {
    pub n_atoms: usize,
    pub q: f64,
    pub c2: f64,
    /// `<k|H|k>`.
    pub diag: Vec<f64>,
    /// `<k+1|H|k>`, length `dim - 1`.
    pub off_diag: Vec<f64>,
}

pub fn build_hamiltonian(n_atoms: usize, q: f64, c2: f64) -> Result<HamiltonianMatrix> {
    validate_atom_number(n_atoms)?;
    let n = n_atoms as f64;
    let dim = n_atoms / 2 + 1;
    let diag = (0..dim)
        .map(|k| {
            let k = k as f64;
            let n0 = n - 2.0 * k;
            c2 / (2.0 * n) * (2.0 * n0 - 1.0) * (2.0 * k) - q * n0
        })
        .collect();
    // a1^dag a-1^dag a0 a0 |k, n0, k> = (k+1) sqrt(n0 (n0-1)) |k+1, n0-2, k+1>
    let off_diag = (0..dim - 1)
        .map(|k| {
            let kf = k as f64;
            let n0 = n - 2.0 * kf;
            c2 / n * (kf + 1.0) * (n0 * (n0 - 1.0)).sqrt()
        })
        .collect();
    Ok(HamiltonianMatrix { n_atoms, q, c2, diag, off_diag })
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for k in 0..d {
            m[(k, k)] = self.diag[k];
        }
        for (k, &v) in self.off_diag.iter().enumerate() {
            m[(k + 1, k)] = v;
            m[(k, k + 1)] = v;
        }
        m
    }

    pub fn apply(&self, amps: &[C64]) -> Vec<C64> {
        let d = self.dim();
        (0..d)
            .map(|k| {
                let mut acc = amps[k] * self.diag[k];
                if k > 0 {
                    acc += amps[k - 1] * self.off_diag[k - 1];
                }
                if k + 1 < d {
                    acc += amps[k + 1] * self.off_diag[k];
                }
                acc
            })
            .collect()
    }

    /// `<psi|H|psi>`.
    pub fn energy(&self, psi: &FockVector) -> f64 {
        let h = self.apply(psi.amplitudes());
        psi.amplitudes().iter().zip(&h).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Energy standard deviation `sqrt(<H^2> - <H>^2)`.
    pub fn energy_spread(&self, psi: &FockVector) -> f64 {
        let h = self.apply(psi.amplitudes());
        let e = self.energy(psi);
        let e2: f64 = h.iter().map(|a| a.norm_sqr()).sum();
        (e2 - e * e).max(0.0).sqrt()
    }
}
