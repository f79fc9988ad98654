//! Single-mode spin-1 many-body dynamics on the `F_z = 0` Fock subspace.
//!
//! Basis states are `|k, N-2k, k>` (populations of `m_F = +1, 0, -1`) for
//! `k = 0..=N/2`. The initial Fock state `|0, N, 0>` is index 0 and the twin-Fock
//! target `|N/2, 0, N/2>` is the last index.

mod bloch;
mod fock;
mod hamiltonian;
mod propagator;

pub use bloch::{bhattacharyya_time, bloch_derivatives, bloch_oracle_step, qsl_time, two_body_energy_spread, BlochPoint};
pub use fock::{validate_atom_number, FockVector, QuantumObservables};
pub use hamiltonian::{build_hamiltonian, HamiltonianMatrix};
pub use propagator::{Propagator, PropagatorCache, SpinSystem};
