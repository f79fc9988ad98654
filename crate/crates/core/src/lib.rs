//! Reinforcement-learning control of spin-1 condensate dynamics.
//!
//! The crate steers a spin-1 system from an arbitrary initial state toward the
//! twin-Fock state `|N/2, 0, N/2>` by modulating the quadratic Zeeman field `q(t)`.
//! Two dynamical models are provided:
//!
//! - [`meanfield`]: the classical `(rho0, theta_s)` pendulum,
//! - [`quantum`]: the single-mode many-body Hamiltonian on the `F_z = 0` Fock subspace.
//!
//! Both are wrapped as episodic environments ([`env`]) and controlled by a
//! from-scratch PPO actor-critic ([`rl`]). Non-learned references live in
//! [`baselines`], analyses and exports in [`eval`].

pub mod baselines;
pub mod config;
pub mod env;
pub mod error;
pub mod eval;
pub mod exec;
pub mod meanfield;
pub mod quantum;
pub mod rl;
pub mod seed;

pub use error::{Error, Result};
pub use exec::Exec;

pub type C64 = num_complex::Complex64;
